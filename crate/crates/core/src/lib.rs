// SPDX-License-Identifier: Apache-2.0

pub mod logic;
pub mod protocol;
pub mod transport;
pub mod model;
pub mod board;
pub mod session;
pub mod verify;
