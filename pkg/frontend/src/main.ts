/**
 * Entry point: reads server configuration, builds the flow, mounts the UI.
 *
 * Configuration comes from URL query parameters (?server=...&token=...)
 * and is remembered in localStorage so a bookmarked app keeps working.
 */

import { ApiClient } from "./api.js";
import { ExamFlow } from "./flow.js";
import { mountApp } from "./ui.js";

function configValue(name: string, fallback: string): string {
  const params = new URLSearchParams(window.location.search);
  const fromQuery = params.get(name);
  if (fromQuery !== null) {
    localStorage.setItem(`footscan.${name}`, fromQuery);
    return fromQuery;
  }
  return localStorage.getItem(`footscan.${name}`) ?? fallback;
}

const server = configValue("server", "http://127.0.0.1:8080");
const token = configValue("token", "");

const api = new ApiClient(server, token);
const flow = new ExamFlow(api, { clientVersion: "1.0.0", pollIntervalMs: 1000 });

const root = document.getElementById("app");
if (!root) throw new Error("missing #app container");
mountApp(root, flow);
