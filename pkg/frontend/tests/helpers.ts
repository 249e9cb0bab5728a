/** Shared jsdom scaffolding for the overlay tests.
 *
 * jsdom has no layout engine, so every element gets a deterministic
 * synthetic bounding box in document order; flag computation in capture()
 * is otherwise exercised for real.
 */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { JSDOM } from "jsdom";

export const DEMO_DIR = join(
  dirname(fileURLToPath(import.meta.url)),
  "..",
  "demo",
);

export function loadDemoPage(
  name: "pageA" | "pageB",
  url = `https://demo.local/${name}`,
): JSDOM {
  const html = readFileSync(join(DEMO_DIR, `${name}.html`), "utf8");
  const dom = new JSDOM(html, { url, runScripts: "outside-only" });
  stubLayout(dom.window.document);
  return dom;
}

export function stubLayout(doc: Document): void {
  const all = Array.from(doc.querySelectorAll("*"));
  all.forEach((el, i) => {
    const rect = {
      x: 10,
      y: 10 + i * 24,
      width: 160,
      height: 20,
      top: 10 + i * 24,
      left: 10,
      right: 170,
      bottom: 30 + i * 24,
      toJSON() {
        return this;
      },
    };
    (el as any).getBoundingClientRect = () => rect;
  });
}
