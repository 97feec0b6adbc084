import { SessionClient } from "./api.js";
import { ElicitApp } from "./ui.js";

const params = new URLSearchParams(window.location.search);
const problem = params.get("problem") ?? "grid";
const base = params.get("api") ?? "";

const client = new SessionClient(base);
const app = new ElicitApp(client, document.body);

document.getElementById("accept")!.addEventListener("click", () => {
  void app.submit(true);
});
document.getElementById("submit")!.addEventListener("click", () => {
  void app.submit(false);
});

void app.start(problem);
