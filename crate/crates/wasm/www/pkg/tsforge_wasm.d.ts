/* tslint:disable */
/* eslint-disable */

/**
 * New series only, for an `AugmentationRequest` such as
 * `{"method": "magnitude_warp", "n_knots": 4, "sigma": 0.2, "n_new": 5}`.
 */
export function augment_preview(set_json: string, request_json: string): string;

/**
 * 2-D embedding of `real` followed by `synth`. `method`: `pca` or `tsne`.
 */
export function embed(real_json: string, synth_json: string, method: string, perplexity: number, seed: number): string;

/**
 * `kind`: `sines`, `sine_const` or `gp`. One feature per series.
 */
export function generate(kind: string, n: number, len_t: number, seed: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly augment_preview: (a: number, b: number, c: number, d: number) => [number, number];
    readonly embed: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number];
    readonly generate: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
