/** Bootstrap entry shared by the bookmarklet and the extension content
 * script. The engine URL can be pinned on window.INSITU_ENGINE_URL before
 * injection; it defaults to a local dev engine. */

import { mountPanel, Panel } from "./panel";

export { capture } from "./capture";
export { EngineClient } from "./client";
export { applyPlan, serializeSubtree } from "./interpreter";
export { mountPanel, Panel } from "./panel";
export * from "./types";

declare global {
  interface Window {
    INSITU_ENGINE_URL?: string;
    __insituPanel?: Panel;
  }
}

export function bootstrap(win: Window & typeof globalThis): Panel {
  if (win.__insituPanel) {
    return win.__insituPanel; // already injected on this page
  }
  const url = win.INSITU_ENGINE_URL ?? "http://127.0.0.1:8321";
  const panel = mountPanel(win.document, url);
  win.__insituPanel = panel;
  void panel.connect().catch(() => {
    /* surfaced in the panel as an error state on first request */
  });
  return panel;
}

if (typeof window !== "undefined" && typeof process === "undefined") {
  bootstrap(window);
}
