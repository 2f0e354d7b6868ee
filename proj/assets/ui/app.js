// Copyright 2026 The hwloop Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Event viewer and operator composer for the /events channel.
(function () {
  const log = document.getElementById("log");
  const status = document.getElementById("status");
  const ws = new WebSocket((location.protocol === "https:" ? "wss://" : "ws://") + location.host + "/events");

  function send(type, data) {
    ws.send(JSON.stringify({ v: 1, type: type, data: data || {} }));
  }

  function row(cls, title, body) {
    const div = document.createElement("div");
    div.className = "ev " + cls;
    const head = document.createElement("div");
    head.textContent = title;
    div.appendChild(head);
    if (body) {
      const pre = document.createElement("pre");
      pre.textContent = body;
      div.appendChild(pre);
    }
    log.appendChild(div);
    log.scrollTop = log.scrollHeight;
  }

  function render(e) {
    const d = e.data || {};
    switch (e.type) {
      case "idle": status.textContent = "idle"; break;
      case "error": row("error", "error", d.message); break;
      case "state":
        status.textContent = d.phase + " / " + d.feedback_level + " / messages " + d.user_messages;
        break;
      case "message":
        row(d.role, "#" + d.index + " " + d.role + " (" + d.phase + (d.feedback_level ? ", " + d.feedback_level : "") + ")", d.content);
        break;
      case "spec_check": row(d.conforms ? "" : "error", "spec check: " + (d.conforms ? "conforms" : "rejected"), d.summary); break;
      case "lint": row("", "lint", JSON.stringify(d.warnings, null, 1)); break;
      case "verdict":
        row(d.passed ? "" : "error", "verdict (" + d.phase + "): " + (d.passed ? "pass" : "fail " + d.fingerprint),
            [d.feedback_text, d.note].filter(Boolean).join("\n"));
        break;
      case "escalation": row("error", d.level + " feedback requested", d.feedback_text || d.note); break;
      case "terminal":
        row("terminal", "result: " + d.terminal + (d.reason ? " (" + d.reason + ")" : "") +
            ", compliant " + (d.compliant === null ? "-" : d.compliant) + ", messages " + d.user_messages);
        status.textContent = "finished";
        break;
      default: row("", e.type, JSON.stringify(d));
    }
  }

  ws.onopen = function () { status.textContent = "connected"; };
  ws.onclose = function () { status.textContent = "disconnected"; };
  ws.onmessage = function (m) { render(JSON.parse(m.data)); };

  document.getElementById("start").onclick = function () {
    log.textContent = "";
    const data = { trial: document.getElementById("trial").value || "T1" };
    const b = document.getElementById("benchmark").value.trim();
    const t = document.getElementById("transcript").value;
    if (b) data.benchmark = b;
    if (t.trim()) data.transcript = t;
    send("start", data);
  };
  document.getElementById("send").onclick = function () {
    send("feedback", { text: document.getElementById("feedback").value });
    document.getElementById("feedback").value = "";
  };
  document.getElementById("abort-hdl").onclick = function () { send("abort", { reason: "wrote_hdl" }); };
  document.getElementById("abort").onclick = function () { send("abort", { reason: "other" }); };
  document.getElementById("approve").onclick = function () { send("regenerate_approval", { approve: true }); };
  document.getElementById("deny").onclick = function () { send("regenerate_approval", { approve: false }); };
})();
