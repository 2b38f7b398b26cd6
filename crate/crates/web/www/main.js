import init, { ClusterDemo } from "./pkg/swarmcast_web.js";

const $ = (id) => document.getElementById(id);
const canvas = $("view");
const ctx = canvas.getContext("2d");
const size = canvas.width;
const palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

let demo;
let seed = 1;
let timer = null;
let lastDistance = NaN;

function draw() {
  ctx.fillStyle = "#fff";
  ctx.fillRect(0, 0, size, size);

  if ($("neurons").checked) {
    const w = demo.weights();
    ctx.fillStyle = "#ccc";
    for (let i = 0; i < w.length; i += 2) ctx.fillRect(w[i] * size - 2, w[i + 1] * size - 2, 4, 4);
  }

  const c = demo.clusters();
  ctx.strokeStyle = "#555";
  for (let i = 0; i < c.length; i += 3) {
    ctx.beginPath();
    ctx.arc(c[i] * size, c[i + 1] * size, Math.max(c[i + 2] * size, 2), 0, 2 * Math.PI);
    ctx.stroke();
  }

  const a = demo.agents();
  const labels = demo.labels();
  for (let i = 0; i < labels.length; i++) {
    ctx.fillStyle = palette[labels[i] % palette.length];
    ctx.beginPath();
    ctx.arc(a[2 * i] * size, a[2 * i + 1] * size, 3, 0, 2 * Math.PI);
    ctx.fill();
  }

  const s = demo.silhouette();
  $("stats").textContent = [
    `frame       ${demo.frame_index()} / ${demo.frame_count()}`,
    `neurons     ${demo.k()}`,
    `clusters    ${c.length / 3}`,
    `silhouette  ${Number.isNaN(s) ? "n/a" : s.toFixed(3)}`,
    `epochs      ${demo.epochs()}`,
    `mean dist   ${lastDistance.toFixed(4)}`,
  ].join("\n");
}

function togglePlay() {
  if (timer) {
    clearInterval(timer);
    timer = null;
    $("play").textContent = "Play";
  } else {
    timer = setInterval(() => { demo.step(1); draw(); }, 40);
    $("play").textContent = "Pause";
  }
}

await init();
demo = new ClusterDemo(Number($("k").value), seed);
lastDistance = demo.distance();

$("play").onclick = togglePlay;
$("step").onclick = () => { demo.step(1); draw(); };
$("neurons").onchange = draw;
$("eta").oninput = () => { $("eta-out").textContent = Number($("eta").value).toFixed(2); };
$("train").onclick = () => { lastDistance = demo.train_epoch(Number($("eta").value)); draw(); };
$("reset").onclick = () => {
  seed += 1;
  demo.reset(Number($("k").value), seed);
  lastDistance = demo.distance();
  draw();
};
draw();
