/**
 * Child-process transport for the line-oriented stdio endpoint.
 *
 * One JSON request per line on stdin, one JSON response per line on stdout.
 * The endpoint answers strictly in request order, so responses are matched
 * FIFO; the echoed id is still verified to catch any desync early.
 */

import { spawn, type ChildProcessByStdio } from "node:child_process";
import { createInterface, type Interface } from "node:readline";
import type { Readable, Writable } from "node:stream";

import { errorFromResponse, InternalError } from "./errors.js";

export interface EndpointOptions {
  /** Interpreter to launch; defaults to $QAMA_PYTHON, then "python3". */
  python?: string;
  /** Arguments after the interpreter; defaults to ["-m", "qama.bindings"]. */
  args?: string[];
  env?: NodeJS.ProcessEnv;
}

interface Pending {
  id: number;
  resolve: (value: Record<string, unknown>) => void;
  reject: (error: Error) => void;
}

export class Endpoint {
  private readonly child: ChildProcessByStdio<Writable, Readable, null>;
  private readonly lines: Interface;
  private readonly pending: Pending[] = [];
  private nextId = 1;
  private exited = false;

  constructor(options: EndpointOptions = {}) {
    const python = options.python ?? process.env.QAMA_PYTHON ?? "python3";
    this.child = spawn(python, options.args ?? ["-m", "qama.bindings"], {
      stdio: ["pipe", "pipe", "inherit"],
      env: options.env ?? process.env,
    });
    this.lines = createInterface({ input: this.child.stdout });
    this.lines.on("line", (line) => this.onLine(line));
    this.child.on("exit", () => {
      this.exited = true;
      this.rejectAll(new InternalError("endpoint process exited"));
    });
    this.child.on("error", (err) => {
      this.exited = true;
      this.rejectAll(new InternalError(`failed to start ${python}: ${err.message}`));
    });
  }

  request(payload: Record<string, unknown>): Promise<Record<string, unknown>> {
    if (this.exited) {
      return Promise.reject(new InternalError("endpoint process exited"));
    }
    const id = this.nextId++;
    return new Promise((resolve, reject) => {
      this.pending.push({ id, resolve, reject });
      this.child.stdin.write(JSON.stringify({ ...payload, id }) + "\n");
    });
  }

  /** Close stdin and wait for the endpoint to exit. */
  async close(): Promise<void> {
    if (!this.exited) {
      this.child.stdin.end();
      await new Promise<void>((resolve) => this.child.once("exit", () => resolve()));
    }
    this.lines.close();
  }

  private onLine(line: string): void {
    const next = this.pending.shift();
    if (next === undefined) {
      return; // the endpoint only speaks when spoken to; drop stray output
    }
    let response: Record<string, unknown>;
    try {
      response = JSON.parse(line) as Record<string, unknown>;
    } catch {
      next.reject(new InternalError(`endpoint wrote a non-JSON line: ${line}`));
      return;
    }
    if (response.id !== undefined && response.id !== next.id) {
      next.reject(
        new InternalError(
          `response id ${String(response.id)} does not match request id ${next.id}`,
        ),
      );
      return;
    }
    if (response.ok === false) {
      const error = (response.error ?? {}) as { code?: unknown; message?: unknown };
      next.reject(
        errorFromResponse(
          String(error.code ?? "internal"),
          String(error.message ?? "unknown endpoint error"),
        ),
      );
      return;
    }
    next.resolve(response);
  }

  private rejectAll(error: Error): void {
    while (this.pending.length > 0) {
      this.pending.shift()!.reject(error);
    }
  }
}
