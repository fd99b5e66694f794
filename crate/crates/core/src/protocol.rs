// SPDX-License-Identifier: Apache-2.0

//! Two-character pin messages.
//!
//! Every message is exactly two ASCII bytes: the pin digit `'1'..='5'`
//! followed by the level digit, `'1'` for high and `'0'` for low. There are
//! no delimiters, checksums or acknowledgements. The same frame means "drive
//! input pin N" when sent to the board and "output pin N is now at this
//! level" when sent back; direction is known only from which way it flows.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::{Pin, SignalLevel};

pub const FRAME_LEN: usize = 2;

pub type Frame = [u8; FRAME_LEN];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("pin {0} outside 1..=5")]
    InvalidPin(u8),
    #[error("level digit {0:?} is neither '0' nor '1'")]
    InvalidLevel(char),
    #[error("malformed frame {0:?}")]
    MalformedFrame(Frame),
    #[error("stream closed with a partial frame {0:?} pending")]
    TruncatedFrame(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    /// Model to board; refers to an input pin.
    Command,
    /// Board to model; refers to an output pin.
    Response,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PinMessage {
    pub pin: Pin,
    pub level: SignalLevel,
    pub direction: Direction,
}

impl PinMessage {
    pub fn command(pin: Pin, level: SignalLevel) -> Self {
        Self { pin, level, direction: Direction::Command }
    }

    pub fn response(pin: Pin, level: SignalLevel) -> Self {
        Self { pin, level, direction: Direction::Response }
    }

    pub fn frame(&self) -> Frame {
        frame_for(self.pin, self.level)
    }

    pub fn decode(frame: &[u8], direction: Direction) -> Result<Self, ProtocolError> {
        let (pin, level) = decode_pin_message(frame)?;
        Ok(Self { pin, level, direction })
    }
}

impl fmt::Display for PinMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fr = self.frame();
        write!(f, "{}{}", fr[0] as char, fr[1] as char)
    }
}

fn frame_for(pin: Pin, level: SignalLevel) -> Frame {
    [b'0' + pin.get(), b'0' + level.bit()]
}

/// Encodes `(pin, level)` as its two-byte frame.
pub fn encode_pin_message(pin: u8, level: SignalLevel) -> Result<Frame, ProtocolError> {
    let pin = Pin::new(pin).ok_or(ProtocolError::InvalidPin(pin))?;
    Ok(frame_for(pin, level))
}

pub fn decode_pin_message(frame: &[u8]) -> Result<(Pin, SignalLevel), ProtocolError> {
    let &[p, l] = frame else {
        let mut fr = [0u8; FRAME_LEN];
        for (d, s) in fr.iter_mut().zip(frame) {
            *d = *s;
        }
        return Err(ProtocolError::MalformedFrame(fr));
    };
    if !p.is_ascii_digit() || !l.is_ascii_digit() {
        return Err(ProtocolError::MalformedFrame([p, l]));
    }
    let pin = Pin::new(p - b'0').ok_or(ProtocolError::InvalidPin(p - b'0'))?;
    let level = match l {
        b'0' => SignalLevel::Low,
        b'1' => SignalLevel::High,
        other => return Err(ProtocolError::InvalidLevel(other as char)),
    };
    Ok((pin, level))
}

/// Splits a byte stream into fixed two-byte frames. A lone trailing byte is
/// held until its partner arrives.
#[derive(Debug, Default, Clone)]
pub struct FrameReader {
    held: Option<u8>,
}

impl FrameReader {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bytes: &[u8]) -> Vec<Frame> {
        let mut frames = Vec::with_capacity((bytes.len() + 1) / FRAME_LEN);
        for &b in bytes {
            match self.held.take() {
                Some(first) => frames.push([first, b]),
                None => self.held = Some(b),
            }
        }
        frames
    }

    pub fn pending(&self) -> Option<u8> {
        self.held
    }

    /// Call when the underlying stream closes.
    pub fn finish(&mut self) -> Result<(), ProtocolError> {
        match self.held.take() {
            Some(b) => Err(ProtocolError::TruncatedFrame(b)),
            None => Ok(()),
        }
    }
}

/// Frames a complete byte sequence; errors if it ends mid-frame.
pub fn frame_stream<I>(chunks: I) -> Result<Vec<Frame>, ProtocolError>
where
    I: IntoIterator,
    I::Item: AsRef<[u8]>,
{
    let mut reader = FrameReader::new();
    let mut frames = Vec::new();
    for chunk in chunks {
        frames.extend(reader.push(chunk.as_ref()));
    }
    reader.finish()?;
    Ok(frames)
}

/// Serial line parameters both ends of a session must agree on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SerialConfig {
    pub byte_size: u8,
    pub stop_bits: u8,
    pub parity: Parity,
    pub nominal_baud: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    None,
    Even,
    Odd,
}

impl Default for SerialConfig {
    /// 8N1 at 9600 baud.
    fn default() -> Self {
        Self { byte_size: 8, stop_bits: 1, parity: Parity::None, nominal_baud: 9600 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use SignalLevel::{High, Low};

    #[test]
    fn documented_examples() {
        assert_eq!(&encode_pin_message(1, High).unwrap(), b"11");
        assert_eq!(&encode_pin_message(1, Low).unwrap(), b"10");
        assert_eq!(&encode_pin_message(2, High).unwrap(), b"21");
        assert_eq!(encode_pin_message(0, High), Err(ProtocolError::InvalidPin(0)));
        assert_eq!(encode_pin_message(6, Low), Err(ProtocolError::InvalidPin(6)));
    }

    #[test]
    fn decode_cases() {
        assert_eq!(decode_pin_message(b"51").unwrap(), (Pin::new(5).unwrap(), High));
        assert_eq!(decode_pin_message(b"60"), Err(ProtocolError::InvalidPin(6)));
        assert_eq!(decode_pin_message(b"00"), Err(ProtocolError::InvalidPin(0)));
        assert_eq!(decode_pin_message(b"1x"), Err(ProtocolError::MalformedFrame(*b"1x")));
        assert_eq!(decode_pin_message(b"12"), Err(ProtocolError::InvalidLevel('2')));
        assert!(matches!(decode_pin_message(b"1"), Err(ProtocolError::MalformedFrame(_))));
    }

    #[test]
    fn round_trip_all_ten() {
        for pin in 1..=5u8 {
            for level in [Low, High] {
                let f = encode_pin_message(pin, level).unwrap();
                let (p, l) = decode_pin_message(&f).unwrap();
                assert_eq!((p.get(), l), (pin, level));
            }
        }
    }

    #[test]
    fn framing_examples() {
        assert_eq!(frame_stream([b"1121"]).unwrap(), vec![*b"11", *b"21"]);

        let mut r = FrameReader::new();
        assert!(r.push(b"1").is_empty());
        assert_eq!(r.push(b"0"), vec![*b"10"]);
        assert!(r.finish().is_ok());

        assert_eq!(frame_stream([&b"11"[..], b"2"]), Err(ProtocolError::TruncatedFrame(b'2')));
    }

    #[test]
    fn message_display_is_wire_form() {
        let m = PinMessage::command(Pin::new(2).unwrap(), High);
        assert_eq!(m.to_string(), "21");
        assert_eq!(PinMessage::decode(b"21", Direction::Command).unwrap(), m);
    }

    proptest! {
        #[test]
        fn decode_never_panics(a: u8, b: u8) {
            let _ = decode_pin_message(&[a, b]);
        }

        #[test]
        fn reframing_random_chunks(
            msgs in prop::collection::vec((1u8..=5, any::<bool>()), 0..64),
            cuts in prop::collection::vec(0usize..200, 0..16),
        ) {
            let frames: Vec<Frame> = msgs.iter().map(|&(p, l)| encode_pin_message(p, l.into()).unwrap()).collect();
            let bytes: Vec<u8> = frames.concat();
            let mut cuts: Vec<usize> = cuts.into_iter().map(|c| c.min(bytes.len())).collect();
            cuts.push(0);
            cuts.push(bytes.len());
            cuts.sort_unstable();
            let chunks: Vec<&[u8]> = cuts.windows(2).map(|w| &bytes[w[0]..w[1]]).collect();
            prop_assert_eq!(frame_stream(chunks).unwrap(), frames);
        }
    }
}
