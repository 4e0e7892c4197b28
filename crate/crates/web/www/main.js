import init, { Demo } from "./pkg/warpforge_web.js";

const $ = (id) => document.getElementById(id);
let demo = null;

function paint(id, rgba, size) {
  const canvas = $(id);
  canvas.width = size;
  canvas.height = size;
  const data = new ImageData(new Uint8ClampedArray(rgba.buffer, rgba.byteOffset, rgba.length), size, size);
  canvas.getContext("2d").putImageData(data, 0, 0);
}

function report(err) {
  $("status").textContent = err ? String(err.message ?? err) : "";
}

function drawCurve(scales, values, current) {
  const c = $("curve");
  const g = c.getContext("2d");
  const pad = 30;
  const w = c.width - 2 * pad;
  const h = c.height - 2 * pad;
  const lo = Math.floor(Math.min(...values)) - 1;
  const hi = Math.ceil(Math.max(...values)) + 1;
  const x = (k) => pad + (k / 2) * w;
  const y = (v) => pad + h - ((v - lo) / (hi - lo)) * h;
  g.clearRect(0, 0, c.width, c.height);
  g.strokeStyle = "#999";
  g.strokeRect(pad, pad, w, h);
  g.fillStyle = "#555";
  g.font = "11px sans-serif";
  g.fillText(`${hi} dB`, 2, pad + 4);
  g.fillText(`${lo} dB`, 2, pad + h);
  for (const k of [0, 1, 2]) g.fillText(String(k), x(k) - 3, pad + h + 14);
  g.strokeStyle = "#c33";
  g.beginPath();
  scales.forEach((k, i) => (i ? g.lineTo(x(k), y(values[i])) : g.moveTo(x(k), y(values[i]))));
  g.stroke();
  g.fillStyle = "#c33";
  scales.forEach((k, i) => g.fillRect(x(k) - 2, y(values[i]) - 2, 4, 4));
  if (current) {
    g.fillStyle = "#26c";
    g.beginPath();
    g.arc(x(current[0]), y(current[1]), 4, 0, 2 * Math.PI);
    g.fill();
  }
}

function synthesize() {
  try {
    const size = Number($("size").value);
    demo?.free();
    demo = new Demo(size, Number($("seed").value) >>> 0, Number($("maxdisp").value));
    $("params").textContent = `${demo.summary()} | max |flow| ${demo.max_flow().toFixed(2)} px`;
    paint("original", demo.original_rgba(), size);
    paint("warped", demo.warped_rgba(), size);
    paint("overlay", demo.overlay_rgba(), size);
    report();
    undo();
    mask();
  } catch (e) {
    report(e);
  }
}

function undo() {
  if (!demo) return;
  try {
    const k = Number($("scale").value);
    const p = demo.psnr(k);
    $("scaleval").textContent = `k = ${k.toFixed(2)}, PSNR ${p.toFixed(2)} dB`;
    paint("undone", demo.undo_rgba(k), demo.size());
    drawCurve(Array.from(demo.curve_scales()), Array.from(demo.psnr_curve()), [k, p]);
  } catch (e) {
    report(e);
  }
}

function mask() {
  if (!demo) return;
  try {
    const args = [Number($("eps").value), Number($("tau").value), Number($("sigma").value), $("drop").checked];
    paint("mask", demo.mask_rgba(...args), demo.size());
    $("maskmean").textContent = `mean ${demo.mask_mean(...args).toFixed(4)}`;
    report();
  } catch (e) {
    report(e);
  }
}

await init();
$("go").onclick = synthesize;
$("next").onclick = () => {
  $("seed").value = Number($("seed").value) + 1;
  synthesize();
};
$("scale").oninput = undo;
for (const id of ["eps", "tau", "sigma", "drop"]) $(id).onchange = mask;
synthesize();
