/** Errors surfaced by the run-directory readers. */

export class MissingArtifact extends Error {
  readonly file: string;
  constructor(file: string) {
    super(`missing artifact: ${file}`);
    this.name = "MissingArtifact";
    this.file = file;
  }
}

export class SchemaVersionMismatch extends Error {
  constructor(file: string, found: unknown, wanted: number) {
    super(`${file}: schema version ${String(found)} != ${wanted}`);
    this.name = "SchemaVersionMismatch";
  }
}
