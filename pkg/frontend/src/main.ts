import { App } from "./app.js";
import { HttpMapApi } from "./api.js";

async function boot(): Promise<void> {
  const canvas = document.getElementById("map") as HTMLCanvasElement;
  const status = document.getElementById("status") as HTMLElement;
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("canvas 2d context unavailable");

  const app = new App(new HttpMapApi(""), ctx, canvas.width, canvas.height);
  try {
    await app.init();
    status.textContent = "";
  } catch (err) {
    status.textContent = `failed to load atlas: ${err}`;
    throw err;
  }

  canvas.addEventListener("pointerdown", (ev) => {
    const rect = canvas.getBoundingClientRect();
    const px = ((ev.clientX - rect.left) / rect.width) * canvas.width;
    const py = ((ev.clientY - rect.top) / rect.height) * canvas.height;
    app.handleClick(px, py).catch((err) => {
      if ((err as Error).name !== "AbortError") {
        status.textContent = String(err);
      }
    });
  });
}

boot();
