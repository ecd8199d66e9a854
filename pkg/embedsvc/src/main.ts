// Entry point. Bind address comes from EMBEDSVC_BIND (host:port,
// default 127.0.0.1:8900); the model is selected with --model at startup.

import { createService } from "./server.js";

function parseArgs(argv: string[]): { model: string } {
  let model = "grid16";
  for (let i = 0; i < argv.length; i++) {
    if (argv[i] === "--model") {
      model = argv[i + 1] ?? "";
      i += 1;
    } else if (argv[i].startsWith("--model=")) {
      model = argv[i].slice("--model=".length);
    } else {
      console.error(`unknown argument ${argv[i]}`);
      process.exit(2);
    }
  }
  return { model };
}

const { model } = parseArgs(process.argv.slice(2));
const bind = process.env.EMBEDSVC_BIND ?? "127.0.0.1:8900";
const idx = bind.lastIndexOf(":");
const host = bind.slice(0, idx);
const port = Number(bind.slice(idx + 1));
if (!host || !Number.isInteger(port)) {
  console.error(`bad EMBEDSVC_BIND ${bind}; expected host:port`);
  process.exit(2);
}

const server = createService(model);
server.listen(port, host, () => {
  console.log(`embedsvc model=${model} listening on http://${host}:${port}`);
});
