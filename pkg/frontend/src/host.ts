/**
 * The minimal editor surface the extension relies on. A real editor plugs
 * its own implementation in; tests use an in-memory fake. Keeping the
 * surface this small is what makes the pass-through property testable.
 */

export interface PositionLike {
  /** zero-based line */
  line: number;
  /** zero-based UTF-16 code unit offset */
  character: number;
}

export interface TextDocumentLike {
  uri: string;
  languageId: string;
  version: number;
  getText(): string;
}

export interface HoverProvider {
  provideHover(
    document: TextDocumentLike,
    position: PositionLike,
  ): Promise<string | null>;
}

export interface Disposable {
  dispose(): void;
}

export interface EditorHost {
  /** Settings lookup for the `unsafeProps.*` namespace. */
  getConfiguration(section: string): Record<string, unknown>;
  registerHoverProvider(languageId: string, provider: HoverProvider): Disposable;
  showErrorMessage(message: string): void;
}

export interface ExtensionContext {
  host: EditorHost;
  subscriptions: Disposable[];
}

export type TraceLevel = "off" | "messages" | "verbose";

export interface ExtensionConfig {
  serverPath: string;
  databasePath: string;
  trace: TraceLevel;
}

export function readConfig(host: EditorHost): ExtensionConfig {
  const raw = host.getConfiguration("unsafeProps");
  const trace = raw["trace"];
  return {
    serverPath: typeof raw["serverPath"] === "string" ? (raw["serverPath"] as string) : "unsafe-props",
    databasePath: typeof raw["databasePath"] === "string" ? (raw["databasePath"] as string) : "",
    trace: trace === "messages" || trace === "verbose" ? trace : "off",
  };
}
