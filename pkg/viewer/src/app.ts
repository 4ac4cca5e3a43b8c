// Browser wiring: one canvas for the camera frame plus overlay, one panel
// for typed input. Everything drawn comes from the folded state in
// SessionClient; this file only moves pixels and DOM around.

import { SessionClient } from "./client.js";
import { Controls, MIC_ENABLED } from "./controls.js";
import { buildOverlay, draw } from "./overlay.js";

const canvas = document.getElementById("overlay") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const panelBox = document.getElementById("panel") as HTMLDivElement;
const panelTitle = document.getElementById("panel-title") as HTMLDivElement;
const panelText = document.getElementById("panel-text") as HTMLInputElement;
const panelExtra = document.getElementById("panel-extra") as HTMLInputElement;
const panelError = document.getElementById("panel-error") as HTMLDivElement;
const panelSubmit = document.getElementById("panel-submit") as HTMLButtonElement;
const panelCancel = document.getElementById("panel-cancel") as HTMLButtonElement;
const micButton = document.getElementById("panel-mic") as HTMLButtonElement;

const frames = new Map<number, HTMLImageElement>();

function frameImage(index: number): HTMLImageElement | null {
  if (index < 0) return null;
  let img = frames.get(index);
  if (!img) {
    img = new Image();
    img.src = `/frames/${index}.png`;
    img.onload = render;
    frames.set(index, img);
  }
  return img.complete && img.naturalWidth > 0 ? img : null;
}

const proto = location.protocol === "https:" ? "wss:" : "ws:";
const client = new SessionClient(`${proto}//${location.host}/ws`, { onChange: render });
const controls = new Controls(client, renderPanel);

function render(): void {
  const scene = client.hello?.scene;
  const width = scene?.width ?? canvas.width;
  const height = scene?.height ?? canvas.height;
  if (canvas.width !== width || canvas.height !== height) {
    canvas.width = width;
    canvas.height = height;
  }
  ctx.clearRect(0, 0, width, height);
  const img = frameImage(client.state.frame);
  if (img) ctx.drawImage(img, 0, 0, width, height);
  else {
    ctx.fillStyle = "#202028";
    ctx.fillRect(0, 0, width, height);
  }
  const status = client.status === "live" ? "live" : client.status;
  draw(ctx, buildOverlay(client.state, width, height, status), width);
}

const PANEL_TITLES: Record<string, string> = {
  ask: "Ask about this object",
  note: "Leave a note",
  countdown: "Countdown (seconds)",
  send_to_contact: "Send to (recipient)",
  compare: "Compare: click other bubbles, then describe what to compare",
};

function renderPanel(): void {
  render();
  const panel = controls.panel;
  if (!panel) {
    panelBox.style.display = "none";
    return;
  }
  panelBox.style.display = "block";
  panelTitle.textContent = PANEL_TITLES[panel.kind] ?? panel.kind;
  const wantsExtra = panel.kind === "send_to_contact" || panel.kind === "note";
  panelExtra.style.display = wantsExtra ? "block" : "none";
  panelExtra.placeholder = panel.kind === "send_to_contact" ? "message (optional)" : "visibility (optional)";
  panelError.textContent = controls.validationError ?? "";
  if (panel.kind === "compare" && controls.compareTargets.length > 0) {
    panelTitle.textContent = `Compare with ${controls.compareTargets.join(", ")}: describe what to compare`;
  }
}

panelSubmit.onclick = () => {
  const panel = controls.panel;
  if (!panel) return;
  const extra =
    panel.kind === "send_to_contact" ? { message: panelExtra.value.trim() } : { visibility: panelExtra.value.trim() };
  controls.submitText(panelText.value, extra);
  if (!controls.panel) {
    panelText.value = "";
    panelExtra.value = "";
  }
  renderPanel();
};

panelCancel.onclick = () => {
  panelText.value = "";
  panelExtra.value = "";
  controls.cancelPanel();
};

panelText.onkeydown = (e) => {
  if (e.key === "Enter") panelSubmit.click();
};

if (!MIC_ENABLED) micButton.style.display = "none";

canvas.addEventListener("click", (e) => {
  const r = canvas.getBoundingClientRect();
  const x = ((e.clientX - r.left) / r.width) * canvas.width;
  const y = ((e.clientY - r.top) / r.height) * canvas.height;
  controls.handleClick(x, y);
});

client.connect();
render();
