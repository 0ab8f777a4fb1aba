/** Websocket session plumbing.
 *
 * Socket callbacks only enqueue; the render loop drains the queue once per
 * animation frame, so all state changes happen on the UI thread's schedule.
 */

import { decodeServerMsg, helloMsg } from "./protocol.js";
import type { InputMsg, ServerMsg } from "./protocol.js";

export class SessionClient {
  private ws: WebSocket;
  private inbox: ServerMsg[] = [];
  open = false;

  constructor(url: string, onStateChange?: (open: boolean) => void) {
    this.ws = new WebSocket(url);
    this.ws.onopen = () => {
      this.ws.send(helloMsg());
      this.open = true;
      onStateChange?.(true);
    };
    this.ws.onclose = () => {
      this.open = false;
      onStateChange?.(false);
    };
    this.ws.onmessage = (ev: MessageEvent<string>) => {
      try {
        this.inbox.push(decodeServerMsg(ev.data));
      } catch {
        // an unknown message type is a server we do not speak with
      }
    };
  }

  /** All messages received since the last drain, in arrival order. */
  drain(): ServerMsg[] {
    const out = this.inbox;
    this.inbox = [];
    return out;
  }

  sendInput(frame: InputMsg): void {
    if (this.open) this.ws.send(JSON.stringify(frame));
  }

  requestResync(): void {
    if (this.open) this.ws.send(JSON.stringify({ t: "resync" }));
  }
}
