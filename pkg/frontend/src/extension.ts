/**
 * Extension entry points: launch the hover server for Rust documents and
 * surface its answers untouched. The extension contributes no hover content
 * of its own; every tooltip byte originates from the server response.
 */

import {
  Disposable,
  EditorHost,
  ExtensionContext,
  HoverProvider,
  PositionLike,
  TextDocumentLike,
  readConfig,
} from "./host.js";
import { LspClient } from "./lspClient.js";

const RUST_LANGUAGE_ID = "rust";

interface ActiveState {
  client: LspClient;
  host: EditorHost;
  registration: Disposable;
  restartAttempted: boolean;
  restartPending: Promise<void> | null;
  deactivated: boolean;
  spawnCount: number;
}

let state: ActiveState | null = null;

/** Visible for tests: process spawns since activation (1 + restarts). */
export function spawnCount(): number {
  return state?.spawnCount ?? 0;
}

export function activeClient(): LspClient | null {
  return state?.client ?? null;
}

export async function activate(context: ExtensionContext): Promise<LspClient | null> {
  const host = context.host;
  const config = readConfig(host);

  const client = new LspClient({
    serverPath: config.serverPath,
    databasePath: config.databasePath,
    trace: config.trace,
    onUnexpectedExit: () => handleUnexpectedExit(),
  });

  const provider: HoverProvider = {
    async provideHover(document: TextDocumentLike, position: PositionLike) {
      const current = state;
      if (!current || !current.client.running) {
        return null;
      }
      try {
        const hover = await current.client.hover(document, position);
        return hover ? hover.value : null;
      } catch {
        return null;
      }
    },
  };

  const registration = host.registerHoverProvider(RUST_LANGUAGE_ID, provider);
  context.subscriptions.push(registration);
  state = {
    client,
    host,
    registration,
    restartAttempted: false,
    restartPending: null,
    deactivated: false,
    spawnCount: 0,
  };

  try {
    await client.start();
    state.spawnCount += 1;
  } catch (error) {
    host.showErrorMessage(
      `unsafe-props: failed to launch hover server at ${config.serverPath}: ${String(error)}`,
    );
    return null;
  }
  return client;
}

function handleUnexpectedExit(): void {
  const current = state;
  if (!current || current.deactivated) {
    return;
  }
  if (current.restartAttempted) {
    current.host.showErrorMessage(
      "unsafe-props: hover server exited again after a restart; giving up.",
    );
    return;
  }
  current.restartAttempted = true;
  current.restartPending = current.client
    .start()
    .then(() => {
      if (state === current) {
        current.spawnCount += 1;
      }
    })
    .catch((error) => {
      current.host.showErrorMessage(
        `unsafe-props: hover server restart failed: ${String(error)}`,
      );
    })
    .finally(() => {
      if (state === current) {
        current.restartPending = null;
      }
    });
}

export async function deactivate(): Promise<void> {
  const current = state;
  if (!current) {
    return;
  }
  current.deactivated = true;
  state = null;
  if (current.restartPending) {
    // A restart in flight finishes spawning before the handshake below
    // shuts the new process down; nothing further is scheduled after it.
    await current.restartPending.catch(() => undefined);
  }
  current.registration.dispose();
  await current.client.stop();
}
