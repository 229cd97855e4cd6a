import { ApiClient } from "./api.js";
import { breadcrumbLabels, layerRects, panelEntries } from "./render.js";
import { ViewStore } from "./state.js";
import type { ViewState } from "./types.js";

const SERVICE_URL =
  (window as { GEOQUERY_SERVICE_URL?: string }).GEOQUERY_SERVICE_URL ??
  "http://127.0.0.1:8000";

const api = new ApiClient(SERVICE_URL, (url, init) => fetch(url, init));
const store = new ViewStore(api);

const svg = document.getElementById("map") as unknown as SVGSVGElement;
const panel = document.getElementById("panel") as HTMLOListElement;
const crumbs = document.getElementById("crumbs") as HTMLElement;
const banner = document.getElementById("banner") as HTMLElement;
const picker = document.getElementById("config") as HTMLSelectElement;
const form = document.getElementById("query-form") as HTMLFormElement;
const input = document.getElementById("query-text") as HTMLInputElement;
const backButton = document.getElementById("back") as HTMLButtonElement;

function render(state: ViewState): void {
  const view = { width: svg.clientWidth || 960, height: svg.clientHeight || 480 };
  svg.replaceChildren();
  for (const [i, rect] of layerRects(state.layer, view).entries()) {
    const el = document.createElementNS("http://www.w3.org/2000/svg", "rect");
    el.setAttribute("x", String(rect.x));
    el.setAttribute("y", String(rect.y));
    el.setAttribute("width", String(rect.width));
    el.setAttribute("height", String(rect.height));
    el.setAttribute("fill", rect.fill);
    el.setAttribute("stroke", rect.stroke);
    el.addEventListener("click", () => {
      const tile = state.layer[i];
      void store.pivotSimilarity({
        col: tile.col,
        row: tile.row,
        season: tile.season,
      });
    });
    const title = document.createElementNS("http://www.w3.org/2000/svg", "title");
    title.textContent = rect.title;
    el.appendChild(title);
    svg.appendChild(el);
  }

  panel.replaceChildren(
    ...panelEntries(state.layer).map((entry) => {
      const li = document.createElement("li");
      li.textContent = `${entry.label} ${entry.score.toFixed(4)}${
        entry.isAnchor ? " [anchor]" : ""
      }`;
      return li;
    }),
  );

  crumbs.replaceChildren(
    ...breadcrumbLabels(state.breadcrumb).map((label) => {
      const span = document.createElement("span");
      span.className = "crumb";
      span.textContent = label;
      return span;
    }),
  );
  backButton.disabled = state.breadcrumb.length === 0;

  if (state.banner) {
    banner.hidden = false;
    banner.textContent = `${state.banner.error_code}: ${state.banner.message}`;
  } else {
    banner.hidden = true;
  }

  if (picker.options.length !== state.configs.length) {
    picker.replaceChildren(
      ...state.configs.map((c) => {
        const opt = document.createElement("option");
        opt.value = c.name;
        opt.textContent = `${c.name} (${c.k_text}, ${c.k_image})`;
        return opt;
      }),
    );
  }
  picker.value = state.configName;
}

store.subscribe(render);

form.addEventListener("submit", (event) => {
  event.preventDefault();
  void store.submitQuery(input.value);
});
picker.addEventListener("change", () => {
  store.setConfig(picker.value);
  if (store.state.queryText) void store.submitQuery(store.state.queryText);
});
backButton.addEventListener("click", () => store.goBack());
banner.addEventListener("click", () => store.dismissBanner());

void store.init();
