// Browser entry point: wires the form controls to the console controller.

import { ServiceClient } from "./api.js";
import { Console } from "./controller.js";
import { bytesToBase64, encodeP6 } from "./ppm.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function imageFileToP6(file: File): Promise<{ base64: string; dataUrl: string }> {
  return new Promise((resolve, reject) => {
    const url = URL.createObjectURL(file);
    const img = new Image();
    img.onload = () => {
      const canvas = document.createElement("canvas");
      canvas.width = img.naturalWidth;
      canvas.height = img.naturalHeight;
      const ctx = canvas.getContext("2d");
      if (!ctx) {
        reject(new Error("canvas unavailable"));
        return;
      }
      ctx.drawImage(img, 0, 0);
      const pixels = ctx.getImageData(0, 0, canvas.width, canvas.height);
      const p6 = encodeP6(canvas.width, canvas.height, pixels.data);
      URL.revokeObjectURL(url);
      resolve({ base64: bytesToBase64(p6), dataUrl: canvas.toDataURL() });
    };
    img.onerror = () => {
      URL.revokeObjectURL(url);
      reject(new Error("could not decode image"));
    };
    img.src = url;
  });
}

function boot(): void {
  const serviceUrl = el<HTMLInputElement>("service-url");
  const cSlider = el<HTMLInputElement>("probe-c");
  const cValue = el<HTMLElement>("probe-c-value");
  const kSlider = el<HTMLInputElement>("top-k");
  const kValue = el<HTMLElement>("top-k-value");
  const frameInput = el<HTMLInputElement>("frame-id");
  const fileInput = el<HTMLInputElement>("image-file");
  const preview = el<HTMLImageElement>("query-preview");
  const queryLabel = el<HTMLElement>("query-label");
  const compareC = el<HTMLInputElement>("compare-c");

  const console_ = new Console(
    document,
    {
      results: el("results"),
      probes: el("probes"),
      compare: el("compare"),
      error: el("error"),
    },
    new ServiceClient(serviceUrl.value),
  );

  serviceUrl.addEventListener("change", () => {
    console_.client = new ServiceClient(serviceUrl.value);
  });
  cSlider.addEventListener("input", () => {
    console_.state.c = Number(cSlider.value);
    cValue.textContent = cSlider.value;
  });
  kSlider.addEventListener("input", () => {
    console_.state.k = Number(kSlider.value);
    kValue.textContent = kSlider.value;
  });
  frameInput.addEventListener("change", () => {
    const frameId = Number(frameInput.value);
    if (Number.isInteger(frameId) && frameId >= 0) {
      console_.setQuery({ kind: "frame", frameId });
      queryLabel.textContent = `indexed frame ${frameId}`;
      preview.removeAttribute("src");
    }
  });
  fileInput.addEventListener("change", async () => {
    const file = fileInput.files?.[0];
    if (!file) {
      return;
    }
    try {
      const { base64, dataUrl } = await imageFileToP6(file);
      console_.setQuery({ kind: "image", base64, label: file.name });
      queryLabel.textContent = `image ${file.name}`;
      preview.src = dataUrl;
    } catch (err) {
      el("error").textContent = String(err);
    }
  });
  el("search-btn").addEventListener("click", () => {
    void console_.submit();
  });
  el("compare-btn").addEventListener("click", () => {
    void console_.tuneAndCompare(Number(compareC.value));
  });
}

boot();
