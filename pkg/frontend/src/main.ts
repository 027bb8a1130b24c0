import { ApiClient } from "./api.js";
import { ConsoleApp } from "./app.js";

const params = new URLSearchParams(window.location.search);
const client = new ApiClient({
  baseUrl: params.get("api") ?? "http://127.0.0.1:8787",
  token: params.get("token") ?? undefined,
});

const app = new ConsoleApp(client, document);
void app.start().catch((error) => {
  const banner = document.querySelector("#banner");
  if (banner) banner.textContent = `failed to reach the service: ${String(error)}`;
});
