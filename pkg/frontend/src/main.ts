import { ApiClient } from "./api.js";
import { App, resolveApiBase } from "./app.js";

const root = document.getElementById("app");
if (root === null) throw new Error("missing #app mount point");

const base = resolveApiBase(location.search, localStorage);
new App(root, new ApiClient(base));
