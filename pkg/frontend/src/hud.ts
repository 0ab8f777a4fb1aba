/** DOM overlay: connection status, tour progress, barrier info, toasts.
 *
 * Events stream in with each delta; the HUD turns them into panel state.
 * BarrierApproached opens the info panel, BarrierResolved closes it and
 * bumps progress, TourCompleted shows the banner.
 */

import type { EventRec, TourRec } from "./protocol.js";
import { tourProgress } from "./viewmodel.js";

const TOAST_MS = 4000;

export class Hud {
  private status: HTMLElement;
  private progress: HTMLElement;
  private info: HTMLElement;
  private banner: HTMLElement;
  private toasts: HTMLElement;

  constructor(root: Document) {
    this.status = root.getElementById("hud-status")!;
    this.progress = root.getElementById("hud-progress")!;
    this.info = root.getElementById("hud-info")!;
    this.banner = root.getElementById("hud-banner")!;
    this.toasts = root.getElementById("hud-toasts")!;
  }

  setStatus(text: string): void {
    this.status.textContent = text;
  }

  setTour(tour: TourRec): void {
    const { done, total } = tourProgress(tour);
    this.progress.textContent = `barriers resolved: ${done} / ${total}`;
  }

  processEvents(events: EventRec[]): void {
    for (const e of events) {
      switch (e.kind) {
        case "BarrierApproached":
          this.info.textContent = String(e["info_text"] ?? "");
          this.info.style.display = "block";
          break;
        case "BarrierResolved":
          this.info.style.display = "none";
          this.toast(`Barrier resolved: ${String(e["mutation_kind"])}`);
          break;
        case "TourCompleted":
          this.banner.style.display = "block";
          break;
        default:
          break; // agent churn and transit events stay off the HUD
      }
    }
  }

  private toast(text: string): void {
    const node = this.toasts.ownerDocument.createElement("div");
    node.className = "toast";
    node.textContent = text;
    this.toasts.appendChild(node);
    setTimeout(() => node.remove(), TOAST_MS);
  }
}
