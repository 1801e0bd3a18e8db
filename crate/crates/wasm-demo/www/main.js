import init, { synthPreview, boostingCurve, compareModels } from "./pkg/ranpredict_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function dataRequest() {
  return {
    n_samples: num("p-n"),
    snr_mean_db: num("p-mean"),
    snr_std_db: num("p-std"),
    noise_std_kbps: num("p-noise"),
    seed: num("p-seed"),
  };
}

function call(fn, req, msg) {
  try {
    return JSON.parse(fn(JSON.stringify(req)));
  } catch (e) {
    $(msg).innerHTML = `<span class="err">${e.message ?? e}</span>`;
    return null;
  }
}

function axes(ctx, w, h, pad, xr, yr, xlabel, ylabel) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#888";
  ctx.strokeRect(pad, 10, w - pad - 10, h - pad - 10);
  ctx.fillStyle = "#444";
  ctx.fillText(xlabel, w / 2, h - 8);
  ctx.fillText(`${xr[0].toFixed(1)}`, pad, h - pad + 14);
  ctx.fillText(`${xr[1].toFixed(1)}`, w - 50, h - pad + 14);
  ctx.fillText(`${yr[1].toFixed(0)}`, 4, 20);
  ctx.fillText(`${yr[0].toFixed(0)}`, 4, h - pad);
  ctx.save();
  ctx.translate(12, h / 2);
  ctx.rotate(-Math.PI / 2);
  ctx.fillText(ylabel, 0, 0);
  ctx.restore();
  const sx = (x) => pad + ((x - xr[0]) / (xr[1] - xr[0] || 1)) * (w - pad - 10);
  const sy = (y) => h - pad - ((y - yr[0]) / (yr[1] - yr[0] || 1)) * (h - pad - 20);
  return [sx, sy];
}

const range = (v) => [Math.min(...v), Math.max(...v)];

function preview() {
  const p = call(synthPreview, dataRequest(), "p-msg");
  if (!p) return;
  const c = $("p-canvas");
  const ctx = c.getContext("2d");
  const [sx, sy] = axes(ctx, c.width, c.height, 40, range(p.snr_db), [0, Math.max(...p.brate_kbps, 1)], "SNR (dB)", "kbps");
  p.snr_db.forEach((s, i) => {
    ctx.fillStyle = `hsl(${(p.mcs[i] * 26) % 360} 70% 45%)`;
    ctx.fillRect(sx(s) - 1, sy(p.brate_kbps[i]) - 1, 2, 2);
  });
  $("p-msg").textContent = `${p.snr_db.length} samples, colour = MCS index`;
}

function curve() {
  const req = {
    data: dataRequest(),
    n_rounds: num("c-rounds"),
    learning_rate: num("c-lr"),
    lambda: num("c-lambda"),
    max_depth: num("c-depth"),
  };
  const r = call(boostingCurve, req, "c-msg");
  if (!r) return;
  const c = $("c-canvas");
  const ctx = c.getContext("2d");
  const all = r.train_mse.concat(r.test_mse);
  const [sx, sy] = axes(ctx, c.width, c.height, 50, [0, r.train_mse.length - 1], [0, Math.max(...all)], "round", "MSE");
  for (const [series, colour] of [[r.train_mse, "#1f77b4"], [r.test_mse, "#d62728"]]) {
    ctx.strokeStyle = colour;
    ctx.beginPath();
    series.forEach((v, i) => (i ? ctx.lineTo(sx(i), sy(v)) : ctx.moveTo(sx(i), sy(v))));
    ctx.stroke();
  }
  const last = r.test_mse.length - 1;
  $("c-msg").textContent = `blue train, red test; final test MSE ${r.test_mse[last].toFixed(1)} after ${last} trees`;
}

function compare() {
  $("m-out").textContent = "fitting...";
  setTimeout(() => {
    const rows = call(compareModels, { data: dataRequest(), task: $("m-task").value }, "m-out");
    if (!rows) return;
    const head = "<tr><th>model</th><th>MSE</th><th>RMSE</th><th>R²</th><th>fit (ms)</th><th>top features</th></tr>";
    const body = rows
      .map((r) => {
        const imp = r.importance.slice(0, 3).map(([f, s]) => `${f} ${(100 * s).toFixed(0)}%`).join(", ");
        return `<tr><td>${r.model}</td><td>${r.mse.toFixed(2)}</td><td>${r.rmse.toFixed(2)}</td><td>${r.r2.toFixed(4)}</td><td>${r.fit_ms.toFixed(0)}</td><td>${imp || "-"}</td></tr>`;
      })
      .join("");
    $("m-out").innerHTML = `<table>${head}${body}</table>`;
  }, 10);
}

await init();
$("p-run").onclick = preview;
$("c-run").onclick = curve;
$("m-run").onclick = compare;
preview();
