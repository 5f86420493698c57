import init, { analyze_study, explore_representatives, HotSeatGame } from "./pkg/lfg_web.js";

const $ = (id) => document.getElementById(id);
const fmt = (x) => (x == null ? "–" : x.toFixed(2));

function showStudy() {
  const rep = JSON.parse(analyze_study(Number($("threshold").value)));
  $("study-summary").textContent =
    `${rep.surviving_matches} surviving matches, ${rep.distinct_terms} distinct terms, ` +
    `mean similarity ${fmt(rep.mean_similarity)} (SD ${fmt(rep.sd_similarity)})`;
  const head = "<tr><th>factor</th><th>guesses</th><th>matches</th><th>ratio</th><th>terms</th></tr>";
  const rows = rep.factors.map((f) =>
    `<tr><td>${f.factor_id + 1}</td><td>${f.guesses}</td><td>${f.matches}</td>` +
    `<td>${fmt(f.guess_match_ratio)}</td>` +
    `<td style="text-align:left">${f.terms.map((t) => `${t.term} (${t.count})`).join(", ")}</td></tr>`);
  $("study-table").innerHTML = head + rows.join("");
}

function showReps() {
  try {
    const reps = JSON.parse(explore_representatives(
      Number($("w-pop").value), Number($("w-rel").value), Number($("w-spec").value),
      Number($("quantile").value), Number($("set-size").value)));
    $("reps").innerHTML = reps.factors.map((f) =>
      `<p>factor ${f.factor + 1} (pool ${f.pool_size}): ` +
      f.entries.map((e) => `${e.item_id} <small>${e.score.toFixed(2)}</small>`).join(", ") + "</p>").join("");
  } catch (e) {
    $("reps").innerHTML = `<p class="error">${e}</p>`;
  }
}

let game = null;

function render() {
  if (!game) return;
  const s = JSON.parse(game.state());
  const left = Math.max(0, Math.ceil((s.ends_at - Date.now()) / 1000));
  $("clock").textContent = s.finished ? "time is up" : `${left}s left, ${s.points} points`;
  $("items").innerHTML = s.round ? s.round.item_ids.map((id) => `<span>item ${id}</span>`).join("") : "";
  $("history").innerHTML = s.history.map((h) => `<li>${h.outcome}${h.term ? `: ${h.term}` : ""}</li>`).join("");
}

function loop() {
  if (game && game.tick(Date.now())) $("game-status").textContent = "game over";
  render();
  requestAnimationFrame(loop);
}

function act(f) {
  try {
    const r = JSON.parse(f());
    $("game-status").textContent = r.result + (r.term ? ` ${r.term}` : "");
  } catch (e) {
    $("game-status").textContent = String(e);
  }
}

await init();
$("threshold").addEventListener("input", showStudy);
for (const id of ["w-pop", "w-rel", "w-spec", "quantile", "set-size"]) $(id).addEventListener("input", showReps);
$("new-game").addEventListener("click", () => {
  game = new HotSeatGame(Math.floor(Math.random() * 1e9), 180, Date.now());
  $("game-status").textContent = "";
});
["left", "right"].forEach((side, player) => {
  const form = $(side);
  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const input = form.querySelector("input");
    if (game) act(() => game.guess(player, input.value, Date.now()));
    input.value = "";
  });
  form.querySelector("[data-skip]").addEventListener("click", () => game && act(() => game.skip(player, Date.now())));
});
showStudy();
showReps();
requestAnimationFrame(loop);
