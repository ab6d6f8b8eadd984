import init, { example_instance, strategies, solve_json, temporal_json, propagate_json } from "./pkg/rcm_web.js";

const $ = (id) => document.getElementById(id);
const SVG = "http://www.w3.org/2000/svg";
const COLORS = ["#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"];

function el(name, attrs, text) {
  const e = document.createElementNS(SVG, name);
  for (const [k, v] of Object.entries(attrs)) e.setAttribute(k, v);
  if (text !== undefined) e.textContent = text;
  return e;
}

function showError(e) {
  $("error").textContent = e ? String(e.message ?? e) : "";
}

function instance() {
  return $("instance").value;
}

function call(f, ...args) {
  showError(null);
  try {
    return JSON.parse(f(instance(), ...args));
  } catch (e) {
    showError(e);
    return null;
  }
}

// Horizontal bars on a shared time axis. `rows` holds {label, from, to, color, outline}.
function timeChart(rows, end, title) {
  const left = 40, unit = Math.max(8, Math.min(40, 760 / Math.max(end, 1))), h = 18;
  const svg = el("svg", { width: left + unit * end + 20, height: rows.length * h + 34 });
  svg.append(el("text", { x: 0, y: 11, class: "label" }, title));
  rows.forEach((r, i) => {
    const y = 16 + i * h;
    svg.append(el("text", { x: 0, y: y + 12, class: "label" }, r.label));
    if (r.to > r.from) {
      svg.append(el("rect", {
        x: left + r.from * unit, y: y + 2, width: (r.to - r.from) * unit, height: h - 4,
        fill: r.outline ? "none" : r.color, stroke: r.color, "stroke-width": r.outline ? 2 : 0,
      }));
    }
  });
  const base = 16 + rows.length * h;
  for (let t = 0; t <= end; t += Math.ceil(end / 20) || 1) {
    svg.append(el("line", { x1: left + t * unit, x2: left + t * unit, y1: 16, y2: base, stroke: "#eee" }));
    svg.append(el("text", { x: left + t * unit - 3, y: base + 12, class: "tick" }, t));
  }
  return svg;
}

function drawSolution(inst, res) {
  $("gantt").replaceChildren();
  $("profile").replaceChildren();
  if (!res.starts) return;
  const end = res.makespan;
  const rows = res.starts.map((s, i) => ({ label: `${i}`, from: s, to: s + inst.durations[i], color: COLORS[i % COLORS.length] }));
  $("gantt").append(timeChart(rows, end, "Schedule"));

  res.profile.forEach((usage, k) => {
    const cap = inst.capacities[k], left = 40, unit = Math.max(8, Math.min(40, 760 / Math.max(end, 1))), hh = 60;
    const svg = el("svg", { width: left + unit * end + 20, height: hh + 30 });
    svg.append(el("text", { x: 0, y: 11, class: "label" }, `Resource ${k} (capacity ${cap})`));
    const scale = hh / Math.max(cap, 1);
    usage.forEach((u, t) => {
      svg.append(el("rect", { x: left + t * unit, y: 16 + hh - u * scale, width: unit - 1, height: u * scale, fill: "#4e79a7" }));
    });
    svg.append(el("line", { x1: left, x2: left + unit * end, y1: 16, y2: 16, stroke: "#b00020", "stroke-dasharray": "4 3" }));
    $("profile").append(svg);
  });
}

function solve() {
  const res = call(solve_json, $("strategy").value, Number($("limit").value));
  if (!res) return;
  const inst = JSON.parse(instance());
  const span = res.makespan === null ? "" : ` ${res.makespan}`;
  $("status").textContent = `${res.status}${span}, ${res.nodes} nodes, ${res.fails} fails, ${res.runtime_ms.toFixed(1)} ms`;
  drawSolution(inst, res);
}

// Window table: one editable [lo, hi] pair per activity.
function fillWindows(windows) {
  const table = $("windows");
  table.replaceChildren();
  const head = table.insertRow();
  for (const h of ["activity", "lo", "hi"]) head.append(Object.assign(document.createElement("th"), { textContent: h }));
  windows.forEach(([lo, hi], i) => {
    const row = table.insertRow();
    row.insertCell().textContent = i;
    for (const [v, cls] of [[lo, "lo"], [hi, "hi"]]) {
      const input = Object.assign(document.createElement("input"), { type: "number", value: v, className: cls });
      row.insertCell().append(input);
    }
  });
  drawWindows(windows);
}

function drawWindows(windows) {
  const inst = JSON.parse(instance());
  const end = Math.max(1, ...windows.map(([, hi], i) => hi + inst.durations[i]));
  const rows = windows.map(([lo, hi], i) => ({ label: `${i}`, from: lo, to: hi + inst.durations[i], color: COLORS[i % COLORS.length], outline: lo !== hi }));
  $("windowchart").replaceChildren(timeChart(rows, end, "Start window plus duration (filled when fixed)"));
}

function temporal() {
  const t = call(temporal_json);
  if (!t) return;
  $("propstatus").textContent = `horizon ${t.horizon}, path lower bound ${t.lower_bound}`;
  fillWindows(t.est.map((e, i) => [e, t.lst[i]]));
}

function propagate() {
  const rows = [...$("windows").querySelectorAll("tr")].slice(1);
  const windows = rows.map((r) => [Number(r.querySelector(".lo").value), Number(r.querySelector(".hi").value)]);
  const max = $("maxspan").value === "" ? null : Number($("maxspan").value);
  const res = call(propagate_json, JSON.stringify({ windows, max_makespan: max }));
  if (!res) return;
  if (!res.consistent) {
    $("propstatus").textContent = "inconsistent: no schedule fits these windows";
    return;
  }
  $("propstatus").textContent = `makespan at least ${res.makespan[0]}`;
  fillWindows(res.windows);
}

await init();
for (const s of JSON.parse(strategies())) $("strategy").append(new Option(s, s, s === "hot-restart", s === "hot-restart"));
const reset = () => {
  $("instance").value = example_instance();
  temporal();
};
$("reset").onclick = reset;
$("solve").onclick = solve;
$("temporal").onclick = temporal;
$("propagate").onclick = propagate;
reset();
solve();
