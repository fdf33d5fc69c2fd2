import init, { builtins, surface_grid, check_copula, compare_splice_a } from "./pkg/splicebound_web.js";

const $ = (id) => document.getElementById(id);

function source() {
  return $("use-json").checked ? $("config").value : $("builtin").value;
}

function show(value) {
  $("result").textContent = typeof value === "string" ? value : JSON.stringify(value, null, 2);
}

// white at 0, dark blue at 1
function shade(v) {
  const t = Math.min(1, Math.max(0, v));
  return [255 * (1 - t), 255 * (1 - 0.8 * t), 255 - 115 * t];
}

let last = null;

function draw() {
  const n = Number($("side").value);
  let values;
  try {
    values = surface_grid(source(), $("kind").value, n);
  } catch (e) {
    show(`error: ${e}`);
    return;
  }
  const canvas = $("heat");
  canvas.width = n;
  canvas.height = n;
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(n, n);
  for (let k = 0; k < n * n; k++) {
    const [r, g, b] = shade(values[k]);
    img.data.set([r, g, b, 255], 4 * k);
  }
  ctx.putImageData(img, 0, 0);

  // the curve y = phi(x)
  ctx.fillStyle = "#d33";
  for (let i = 0; i < n; i++) {
    const row = Math.round((1 - values[n * n + i]) * (n - 1));
    ctx.fillRect(i, row, 1, 1);
  }
  last = { n, values };
}

function hover(event) {
  if (!last) return;
  const rect = $("heat").getBoundingClientRect();
  const { n, values } = last;
  const i = Math.min(n - 1, Math.floor(((event.clientX - rect.left) / rect.width) * n));
  const j = Math.min(n - 1, Math.floor(((event.clientY - rect.top) / rect.height) * n));
  const x = i / (n - 1);
  const y = 1 - j / (n - 1);
  $("hover").textContent = `(${x.toFixed(3)}, ${y.toFixed(3)}) -> ${values[j * n + i].toFixed(6)}`;
}

function run(op) {
  try {
    show(JSON.parse(op(source(), Number($("res").value))));
  } catch (e) {
    show(`error: ${e}`);
  }
}

await init();
for (const name of JSON.parse(builtins())) {
  $("builtin").add(new Option(name, name));
}
$("draw").addEventListener("click", draw);
$("heat").addEventListener("mousemove", hover);
$("copula").addEventListener("click", () => run(check_copula));
$("compare").addEventListener("click", () => run(compare_splice_a));
draw();
