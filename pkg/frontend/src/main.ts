import { ApiClient } from "./api.js";
import { SessionConsole } from "./controller.js";
import { bindActions, render } from "./dom.js";

const params = new URLSearchParams(window.location.search);
const sessionId = params.get("session");
const root = document.getElementById("app") as HTMLElement;

if (!sessionId) {
  root.innerHTML =
    '<div class="banner warn">open this console as ?session=&lt;session id&gt;</div>';
} else {
  const api = new ApiClient("");
  const console_ = new SessionConsole(api, sessionId, (state) =>
    render(root, state),
  );
  bindActions(root, (id, choice) => void console_.label(id, choice));
  document.addEventListener("keydown", (event) => {
    if (event.target instanceof HTMLInputElement) {
      return;
    }
    void console_.handleKey(event.key);
  });
  void console_.refresh();
  console_.startPolling(1000);
}
