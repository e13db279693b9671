// Glue for index.html. `pkg/` is produced by wasm-bindgen (see the README).
import init, { grid_points, soliton_profile, lowest_eigenvalues, p_variation, Simulation } from "./pkg/gkdv_wasm_demo.js";

const N = 256;
const LENGTH = 60;

function plot(canvas, xs, curves) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const all = curves.flatMap((c) => Array.from(c.ys));
  const lo = Math.min(0, ...all);
  const hi = Math.max(...all) * 1.1 || 1;
  const sx = (x) => ((x - xs[0]) / (xs[xs.length - 1] - xs[0])) * (w - 20) + 10;
  const sy = (y) => h - 10 - ((y - lo) / (hi - lo)) * (h - 20);
  ctx.strokeStyle = "#bbb";
  ctx.beginPath();
  ctx.moveTo(0, sy(0));
  ctx.lineTo(w, sy(0));
  ctx.stroke();
  for (const { ys, color } of curves) {
    ctx.strokeStyle = color;
    ctx.beginPath();
    ys.forEach((y, i) => (i === 0 ? ctx.moveTo(sx(xs[i]), sy(y)) : ctx.lineTo(sx(xs[i]), sy(y))));
    ctx.stroke();
  }
}

function guarded(out, f) {
  try {
    f();
  } catch (e) {
    out.textContent = `error: ${e.message ?? e}`;
  }
}

await init();
const xs = grid_points(N, LENGTH);
const $ = (id) => document.getElementById(id);

$("sol-go").onclick = () =>
  guarded($("sol-out"), () => {
    const c = Number($("sol-c").value);
    plot($("sol-canvas"), xs, [{ ys: soliton_profile(c, N, LENGTH), color: "#1f5fa8" }]);
    const ev = lowest_eigenvalues(c, N, LENGTH, 3);
    $("sol-out").textContent =
      `lowest eigenvalues of 𝓛: ${Array.from(ev, (v) => v.toFixed(8)).join(", ")}\n` +
      `expected ground state −(21/4)c² = ${(-5.25 * c * c).toFixed(8)}`;
  });

let sim = null;
let initial = null;
let running = false;

function setRunning(flag) {
  running = flag;
  $("sim-run").textContent = flag ? "Pause" : "Run";
}

function resetSim() {
  guarded($("sim-out"), () => {
    setRunning(false);
    sim = new Simulation(N, LENGTH, 1.0, -15.0, Number($("sim-amp").value), BigInt($("sim-seed").value));
    initial = sim.values();
    drawSim();
  });
}

function drawSim() {
  plot($("sim-canvas"), xs, [
    { ys: initial, color: "#ccc" },
    { ys: sim.values(), color: "#a8321f" },
  ]);
  const [c, y] = sim.modulation();
  $("sim-out").textContent =
    `t = ${sim.time().toFixed(2)}   mass = ${sim.mass().toFixed(10)}   energy = ${sim.energy().toFixed(10)}\n` +
    `modulation: c = ${c.toFixed(6)}, y = ${y.toFixed(4)}`;
}

function tick() {
  if (!running) return;
  guarded($("sim-out"), () => {
    sim.advance(0.25, 5e-3);
    drawSim();
  });
  if (running && sim.time() < 30) requestAnimationFrame(tick);
  else setRunning(false);
}

$("sim-reset").onclick = resetSim;
$("sim-run").onclick = () => {
  if (!sim) resetSim();
  setRunning(!running);
  if (running) requestAnimationFrame(tick);
};

$("var-go").onclick = () =>
  guarded($("var-out"), () => {
    const series = new Float64Array($("var-series").value.split(",").map((s) => Number(s.trim())));
    const p = Number($("var-p").value);
    $("var-out").textContent = `‖·‖_V^${p} = ${p_variation(series, p).toFixed(10)}`;
  });

$("sol-go").onclick();
resetSim();
