/**
 * A deliberately small language client: spawns the hover server over stdio,
 * performs the initialize handshake, lazily syncs documents, and forwards
 * hover requests. Responses are passed through without reformatting so the
 * editor shows exactly the bytes the server produced.
 */

import { ChildProcess, spawn } from "node:child_process";

import { FrameDecoder, RpcMessage, encodeMessage } from "./jsonRpc.js";
import { PositionLike, TextDocumentLike, TraceLevel } from "./host.js";

interface Pending {
  resolve: (value: unknown) => void;
  reject: (error: Error) => void;
}

export interface LspClientOptions {
  serverPath: string;
  serverArgs?: string[];
  databasePath?: string;
  trace?: TraceLevel;
  onUnexpectedExit?: (code: number | null) => void;
  onTrace?: (line: string) => void;
}

export interface HoverResult {
  kind: string;
  value: string;
}

export class LspClient {
  private child: ChildProcess | null = null;
  private nextId = 1;
  private pending = new Map<number, Pending>();
  private syncedDocs = new Map<string, number>();
  private stopping = false;
  private spawnError: Error | null = null;
  private exited = true;
  private exitPromise: Promise<void> = Promise.resolve();

  constructor(private readonly options: LspClientOptions) {}

  get running(): boolean {
    return this.child !== null && !this.exited && !this.spawnError;
  }

  get pid(): number | undefined {
    return this.child?.pid;
  }

  /** Spawn the server and complete the initialize handshake. */
  async start(): Promise<void> {
    this.stopping = false;
    this.spawnError = null;
    this.syncedDocs.clear();
    const env = { ...process.env };
    if (this.options.databasePath) {
      env.UNSAFE_PROPS_DATABASE = this.options.databasePath;
    }
    const args = this.options.serverArgs ?? ["serve-lsp"];
    const child = spawn(this.options.serverPath, args, { env, stdio: ["pipe", "pipe", "pipe"] });
    this.child = child;

    this.exited = false;
    const decoder = new FrameDecoder((message) => this.dispatch(message));
    child.stdout?.on("data", (chunk: Buffer) => decoder.feed(chunk));
    child.stderr?.on("data", (chunk: Buffer) => this.trace(`server: ${chunk.toString("utf8")}`));
    let resolveExit: () => void = () => undefined;
    this.exitPromise = new Promise<void>((resolve) => {
      resolveExit = resolve;
    });
    child.on("exit", (code) => {
      this.exited = true;
      this.failAllPending(new Error(`server exited with code ${code}`));
      resolveExit();
      if (!this.stopping) {
        this.options.onUnexpectedExit?.(code);
      }
    });

    const spawned = new Promise<void>((resolve, reject) => {
      child.once("spawn", () => resolve());
      child.once("error", (error) => {
        this.spawnError = error;
        this.exited = true;
        this.failAllPending(error);
        resolveExit();
        reject(error);
      });
    });
    await spawned;
    await this.request("initialize", {
      processId: process.pid,
      capabilities: {},
      clientInfo: { name: "unsafe-props-editor" },
    });
    this.notify("initialized", {});
  }

  private dispatch(message: RpcMessage): void {
    if (typeof message.id === "number" && (message.result !== undefined || message.error)) {
      const pending = this.pending.get(message.id);
      if (!pending) {
        return;
      }
      this.pending.delete(message.id);
      if (message.error) {
        pending.reject(new Error(`${message.error.code}: ${message.error.message}`));
      } else {
        pending.resolve(message.result);
      }
    }
  }

  private failAllPending(error: Error): void {
    for (const pending of this.pending.values()) {
      pending.reject(error);
    }
    this.pending.clear();
  }

  private send(message: RpcMessage): void {
    if (!this.child?.stdin?.writable) {
      throw new Error("server is not running");
    }
    this.trace(`-> ${message.method ?? `response ${message.id}`}`);
    this.child.stdin.write(encodeMessage(message));
  }

  request(method: string, params: unknown, timeoutMs = 5000): Promise<unknown> {
    const id = this.nextId++;
    const result = new Promise<unknown>((resolve, reject) => {
      const timer = setTimeout(() => {
        this.pending.delete(id);
        reject(new Error(`request ${method} timed out`));
      }, timeoutMs);
      this.pending.set(id, {
        resolve: (value) => {
          clearTimeout(timer);
          resolve(value);
        },
        reject: (error) => {
          clearTimeout(timer);
          reject(error);
        },
      });
    });
    try {
      this.send({ jsonrpc: "2.0", id, method, params });
    } catch (error) {
      const pending = this.pending.get(id);
      this.pending.delete(id);
      pending?.reject(error instanceof Error ? error : new Error(String(error)));
    }
    return result;
  }

  notify(method: string, params: unknown): void {
    this.send({ jsonrpc: "2.0", method, params });
  }

  /** Ensure the server has the document's current text before a request. */
  syncDocument(document: TextDocumentLike): void {
    const synced = this.syncedDocs.get(document.uri);
    if (synced === undefined) {
      this.notify("textDocument/didOpen", {
        textDocument: {
          uri: document.uri,
          languageId: document.languageId,
          version: document.version,
          text: document.getText(),
        },
      });
      this.syncedDocs.set(document.uri, document.version);
    } else if (synced < document.version) {
      this.notify("textDocument/didChange", {
        textDocument: { uri: document.uri, version: document.version },
        contentChanges: [{ text: document.getText() }],
      });
      this.syncedDocs.set(document.uri, document.version);
    }
  }

  async hover(document: TextDocumentLike, position: PositionLike): Promise<HoverResult | null> {
    this.syncDocument(document);
    const result = (await this.request("textDocument/hover", {
      textDocument: { uri: document.uri },
      position,
    })) as { contents?: HoverResult } | null;
    if (!result || !result.contents) {
      return null;
    }
    return result.contents;
  }

  /** Shutdown handshake with a best-effort kill when the server lingers. */
  async stop(timeoutMs = 2000): Promise<void> {
    const child = this.child;
    this.stopping = true;
    if (!child || this.exited) {
      this.child = null;
      return;
    }
    try {
      await this.request("shutdown", null, timeoutMs);
      this.notify("exit", {});
    } catch {
      // fall through to the kill below
    }
    const timer = setTimeout(() => child.kill("SIGKILL"), timeoutMs);
    await this.exitPromise;
    clearTimeout(timer);
    this.child = null;
  }

  private trace(line: string): void {
    if (this.options.trace && this.options.trace !== "off") {
      this.options.onTrace?.(line.trimEnd());
    }
  }
}
