// Minimal surface for the optional encoder dependency; real typings apply
// when the package is installed, this shim keeps the build green without it.
declare module "@huggingface/transformers" {
  export function pipeline(
    task: string,
    model?: string,
    options?: Record<string, unknown>
  ): Promise<any>;
}
