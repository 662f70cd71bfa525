/**
 * Viewer application: four views (reference, moving/warped, blend,
 * red-cyan), registration toolbar, configuration dialog, match window,
 * and save/export. Talks to the service exclusively through api.ts.
 */

import {
  assetUrl,
  createRegistration,
  exportUrl,
  getConfig,
  pollJob,
  putConfig,
  resetConfig,
  uploadImage,
  type UploadedImage,
} from "./api";
import { blendPixels, type PixelBuffer } from "./blend";
import {
  defaultConfig,
  validateConfig,
  type RegistrationConfig,
} from "./config-form";
import { ImageView } from "./view";
import { SyncGroup } from "./viewstate";

const VIEW_TITLES = ["1 · reference", "2 · moving", "3 · blend", "4 · red-cyan"];
const POLL_INTERVAL_MS = 500;

interface AppState {
  reference: UploadedImage | null;
  moving: UploadedImage | null;
  referenceUrl: string | null;
  movingUrl: string | null;
  jobId: string | null;
  jobState: string;
  assets: string[];
  config: RegistrationConfig;
  alpha: number;
  handMode: boolean;
  refPixels: PixelBuffer | null;
  warpedPixels: PixelBuffer | null;
}

const state: AppState = {
  reference: null,
  moving: null,
  referenceUrl: null,
  movingUrl: null,
  jobId: null,
  jobState: "idle",
  assets: [],
  config: defaultConfig(),
  alpha: 0.5,
  handMode: false,
  refPixels: null,
  warpedPixels: null,
};

const group = new SyncGroup(4);
let views: ImageView[] = [];

function $(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

function setStatus(text: string): void {
  $("status").textContent = text;
}

function renderAll(): void {
  views.forEach((v) => v.render());
}

async function loadPixels(url: string): Promise<PixelBuffer> {
  const img = new Image();
  await new Promise<void>((resolve, reject) => {
    img.onload = () => resolve();
    img.onerror = reject;
    img.src = url;
  });
  const canvas = document.createElement("canvas");
  canvas.width = img.naturalWidth;
  canvas.height = img.naturalHeight;
  const ctx = canvas.getContext("2d")!;
  ctx.drawImage(img, 0, 0);
  const data = ctx.getImageData(0, 0, canvas.width, canvas.height);
  return { width: data.width, height: data.height, data: data.data };
}

function updateBlendView(): void {
  if (!state.refPixels || !state.warpedPixels) return;
  views[2].setPixels(blendPixels(state.refPixels, state.warpedPixels, state.alpha));
}

async function handleFile(viewIndex: 0 | 1, file: File): Promise<void> {
  setStatus(`uploading ${file.name} ...`);
  try {
    const info = await uploadImage(file, file.name);
    const url = URL.createObjectURL(file);
    if (viewIndex === 0) {
      state.reference = info;
      state.referenceUrl = url;
    } else {
      state.moving = info;
      state.movingUrl = url;
    }
    views[viewIndex].setImageUrl(url, () => views[viewIndex].fit());
    setStatus(`${file.name}: ${info.width} x ${info.height}`);
    updateRunButton();
  } catch (err) {
    setStatus(`upload failed: ${err}`);
  }
}

function updateRunButton(): void {
  ($("btn-run") as HTMLButtonElement).disabled =
    !state.reference || !state.moving || state.jobState === "running";
}

async function runRegistration(): Promise<void> {
  if (!state.reference || !state.moving) return;
  state.jobState = "running";
  updateRunButton();
  setStatus("registration queued ...");
  try {
    const jobId = await createRegistration(
      state.reference.image_id,
      state.moving.image_id,
      state.config
    );
    state.jobId = jobId;
    for await (const record of pollJob(jobId, POLL_INTERVAL_MS)) {
      state.jobState = record.state;
      setStatus(`job ${record.state}${record.stage ? ` (${record.stage})` : ""}`);
      if (record.state === "failed") {
        setStatus(`registration failed at ${record.stage}: ${record.message}`);
        break;
      }
      if (record.state === "done") {
        state.assets = record.assets;
        await showResults(jobId);
        const inliers = record.result?.inlier_count ?? 0;
        const matches = record.result?.match_count ?? 0;
        setStatus(`registered: ${inliers}/${matches} inlier matches`);
        break;
      }
    }
  } catch (err) {
    setStatus(`registration error: ${err}`);
    state.jobState = "failed";
  }
  updateRunButton();
  ($("btn-save") as HTMLButtonElement).disabled = state.jobState !== "done";
  ($("btn-save-all") as HTMLButtonElement).disabled = state.jobState !== "done";
  ($("btn-matches") as HTMLButtonElement).disabled =
    state.jobState !== "done" || !state.assets.includes("matches");
}

async function showResults(jobId: string): Promise<void> {
  views[1].setImageUrl(assetUrl(jobId, "warped"), () => views[1].fit());
  views[3].setImageUrl(assetUrl(jobId, "overlay_redcyan"), () => views[3].fit());
  const [ref, warped] = await Promise.all([
    loadPixels(assetUrl(jobId, "reference")),
    loadPixels(assetUrl(jobId, "warped")),
  ]);
  state.refPixels = ref;
  state.warpedPixels = warped;
  updateBlendView();
  views[2].fit();
}

function openConfigDialog(): void {
  const dialog = $("config-dialog") as HTMLDialogElement;
  const cfg = state.config;
  (["patch_size", "n_max", "tau_kp", "resize_policy", "backend"] as const).forEach(
    (k) => (($(`cfg-${k}`) as HTMLInputElement).value = String(cfg[k]))
  );
  ($("cfg-method") as HTMLSelectElement).value = cfg.estimator.method;
  ($("cfg-tau_reproj") as HTMLInputElement).value = String(cfg.estimator.tau_reproj);
  ($("cfg-seed") as HTMLInputElement).value = String(cfg.estimator.seed);
  ($("cfg-visualize") as HTMLInputElement).checked = cfg.visualize_matches;
  $("cfg-errors").textContent = "";
  dialog.showModal();
}

function readConfigForm(): RegistrationConfig {
  return {
    patch_size: Number(($("cfg-patch_size") as HTMLInputElement).value),
    n_max: Number(($("cfg-n_max") as HTMLInputElement).value),
    tau_kp: Number(($("cfg-tau_kp") as HTMLInputElement).value),
    resize_policy: ($("cfg-resize_policy") as HTMLInputElement).value,
    backend: ($("cfg-backend") as HTMLInputElement).value,
    estimator: {
      ...state.config.estimator,
      method: ($("cfg-method") as HTMLSelectElement).value,
      tau_reproj: Number(($("cfg-tau_reproj") as HTMLInputElement).value),
      seed: Number(($("cfg-seed") as HTMLInputElement).value),
    },
    visualize_matches: ($("cfg-visualize") as HTMLInputElement).checked,
  };
}

async function saveConfigForm(): Promise<boolean> {
  const cfg = readConfigForm();
  const errors = validateConfig(cfg);
  if (errors.length) {
    $("cfg-errors").textContent = errors
      .map((e) => `${e.field}: ${e.message}`)
      .join("\n");
    return false;
  }
  try {
    await putConfig(cfg);
    state.config = cfg;
    return true;
  } catch (err) {
    $("cfg-errors").textContent = String(err);
    return false;
  }
}

function download(url: string, filename: string): void {
  const a = document.createElement("a");
  a.href = url;
  a.download = filename;
  a.click();
}

function openSaveDialog(): void {
  const dialog = $("save-dialog") as HTMLDialogElement;
  const list = $("save-list");
  list.innerHTML = "";
  state.assets.forEach((asset) => {
    const label = document.createElement("label");
    const box = document.createElement("input");
    box.type = "checkbox";
    box.checked = true;
    box.dataset.asset = asset;
    label.append(box, ` ${asset}.png`);
    list.append(label);
  });
  dialog.showModal();
}

function wireToolbar(): void {
  $("btn-open-ref").addEventListener("click", () => $("file-ref").click());
  $("btn-open-mov").addEventListener("click", () => $("file-mov").click());
  (["ref", "mov"] as const).forEach((which, idx) => {
    $(`file-${which}`).addEventListener("change", (ev) => {
      const input = ev.target as HTMLInputElement;
      if (input.files?.[0]) void handleFile(idx as 0 | 1, input.files[0]);
    });
  });

  $("btn-configure").addEventListener("click", openConfigDialog);
  $("cfg-save").addEventListener("click", async (ev) => {
    ev.preventDefault();
    if (await saveConfigForm()) ($("config-dialog") as HTMLDialogElement).close();
  });
  $("cfg-defaults").addEventListener("click", async (ev) => {
    ev.preventDefault();
    const doc = await resetConfig();
    state.config = doc.config;
    openConfigDialog();
  });
  $("cfg-cancel").addEventListener("click", (ev) => {
    ev.preventDefault();
    ($("config-dialog") as HTMLDialogElement).close();
  });

  $("btn-run").addEventListener("click", () => void runRegistration());

  const syncBox = $("chk-sync") as HTMLInputElement;
  syncBox.addEventListener("change", () => {
    group.setSync(syncBox.checked);
    renderAll();
  });
  const handBox = $("chk-hand") as HTMLInputElement;
  handBox.addEventListener("change", () => {
    state.handMode = handBox.checked;
  });

  $("btn-fit").addEventListener("click", () => {
    views.forEach((v) => v.fit());
    renderAll();
  });

  const slider = $("blend-slider") as HTMLInputElement;
  slider.addEventListener("input", () => {
    state.alpha = Number(slider.value) / 100;
    $("blend-value").textContent = state.alpha.toFixed(2);
    updateBlendView();
  });

  $("btn-matches").addEventListener("click", () => {
    if (!state.jobId) return;
    ($("match-image") as HTMLImageElement).src = assetUrl(state.jobId, "matches");
    ($("match-dialog") as HTMLDialogElement).showModal();
  });
  $("match-close").addEventListener("click", () =>
    ($("match-dialog") as HTMLDialogElement).close()
  );

  $("btn-save").addEventListener("click", openSaveDialog);
  $("save-confirm").addEventListener("click", (ev) => {
    ev.preventDefault();
    if (!state.jobId) return;
    $("save-list")
      .querySelectorAll<HTMLInputElement>("input[data-asset]")
      .forEach((box) => {
        if (box.checked) {
          download(assetUrl(state.jobId!, box.dataset.asset!), `${box.dataset.asset}.png`);
        }
      });
    ($("save-dialog") as HTMLDialogElement).close();
  });
  $("save-cancel").addEventListener("click", (ev) => {
    ev.preventDefault();
    ($("save-dialog") as HTMLDialogElement).close();
  });
  $("btn-save-all").addEventListener("click", () => {
    if (state.jobId) download(exportUrl(state.jobId), `${state.jobId}.zip`);
  });
}

function wireDragAndDrop(): void {
  views.slice(0, 2).forEach((view, idx) => {
    view.canvas.addEventListener("dragover", (ev) => {
      ev.preventDefault();
      view.canvas.classList.add("drop-target");
    });
    view.canvas.addEventListener("dragleave", () =>
      view.canvas.classList.remove("drop-target")
    );
    view.canvas.addEventListener("drop", (ev) => {
      ev.preventDefault();
      view.canvas.classList.remove("drop-target");
      const file = ev.dataTransfer?.files?.[0];
      if (file) void handleFile(idx as 0 | 1, file);
    });
  });
}

function layout(): void {
  const grid = $("views");
  const cell = grid.children[0] as HTMLElement;
  const w = cell.clientWidth - 2;
  const h = cell.clientHeight - 26;
  views.forEach((v) => v.resize(Math.max(64, w), Math.max(64, h)));
}

async function init(): Promise<void> {
  const grid = $("views");
  views = VIEW_TITLES.map((title, i) => {
    const cell = document.createElement("div");
    cell.className = "view-cell";
    const header = document.createElement("div");
    header.className = "view-title";
    header.textContent = title;
    const view = new ImageView(i, group, renderAll, () => state.handMode);
    cell.append(header, view.canvas);
    grid.append(cell);
    return view;
  });
  wireToolbar();
  wireDragAndDrop();
  window.addEventListener("resize", layout);
  layout();
  try {
    const doc = await getConfig();
    state.config = doc.config;
    setStatus(doc.defaults ? "ready (default settings)" : "ready (saved settings)");
  } catch {
    setStatus("ready (service unreachable; configure and upload once it is up)");
  }
  updateRunButton();
}

void init();
