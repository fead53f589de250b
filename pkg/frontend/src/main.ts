import { ServiceClient } from "./api.js";
import { App } from "./app.js";

declare global {
  interface Window {
    TONEGAP_ORIGIN?: string;
  }
}

const origin = window.TONEGAP_ORIGIN ?? "http://127.0.0.1:8787";
const root = document.getElementById("app");
if (root) {
  const app = new App(root, new ServiceClient(origin));
  void app.start();
}
