// SPDX-License-Identifier: Apache-2.0
"use strict";

let ws = null;
let lastSeq = 0;
const $ = (id) => document.getElementById(id);

function lampRow(parent, label, id, withToggle) {
  const row = document.createElement("div");
  row.className = "row";
  if (withToggle) {
    for (const level of [1, 0]) {
      const b = document.createElement("button");
      b.textContent = level ? "ON" : "OFF";
      b.onclick = () => send({ type: "set_pin", pin: Number(id.slice(2)), level });
      row.appendChild(b);
    }
  }
  const lamp = document.createElement("span");
  lamp.className = "lamp";
  lamp.id = id;
  row.appendChild(lamp);
  row.appendChild(document.createTextNode(" " + label));
  parent.appendChild(row);
}

for (let i = 1; i <= 5; i++) {
  lampRow($("inputs"), "in" + i, "in" + i, true);
  lampRow($("outputs"), "out" + i, "ou" + i, false);
}

function send(msg) {
  if (ws && ws.readyState === WebSocket.OPEN) ws.send(JSON.stringify(msg));
}

function render(s) {
  if (s.seq <= lastSeq) return;
  lastSeq = s.seq;
  $("mode").value = s.mode;
  $("status").textContent = s.status + (s.status_detail ? ": " + s.status_detail : "");
  $("status").className = "status " + s.status;
  s.inputs.forEach((v, i) => $("in" + (i + 1)).classList.toggle("on", v === 1));
  s.outputs.forEach((v, i) => $("ou" + (i + 1)).classList.toggle("on", v === 1));
  $("internals").hidden = !s.internals;
  $("nodes").textContent = "";
  for (const [k, v] of Object.entries(s.internals || {})) lampRow($("nodes"), k, "n-" + k, false), $("n-" + k).classList.toggle("on", v === 1);
  $("log").textContent = s.log.join("\n");
}

function connect() {
  ws = new WebSocket("ws://" + location.host + "/ws");
  ws.onopen = () => { document.body.classList.remove("disconnected"); lastSeq = 0; };
  ws.onmessage = (e) => {
    const m = JSON.parse(e.data);
    if (m.type === "state") render(m);
    else if (m.type === "error") $("log").textContent = "error: " + m.detail + "\n" + $("log").textContent;
    else if (m.type === "sweep_result") $("log").textContent = m.mode + " sweep: " + m.verdict.verdict + "\n" + m.csv;
  };
  ws.onclose = () => {
    document.body.classList.add("disconnected");
    $("status").textContent = "disconnected";
    $("status").className = "status disconnected";
    setTimeout(connect, 1000);
  };
}

$("mode").onchange = (e) => send({ type: "set_mode", mode: e.target.value });
$("sweep").onclick = () => send({ type: "run_sweep", mode: $("mode").value });
connect();
