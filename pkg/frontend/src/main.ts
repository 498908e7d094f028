import { Api } from "./api";
import { createApp } from "./app";
import "./styles.css";

const root = document.getElementById("app");
if (root === null) {
    throw new Error("missing #app mount point");
}
createApp(root, new Api(""));
