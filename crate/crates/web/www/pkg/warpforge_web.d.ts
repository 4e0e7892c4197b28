/* tslint:disable */
/* eslint-disable */

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    curve_scales(): Float64Array;
    mask_mean(epsilon: number, tau: number, blur_sigma: number, drop_backward: boolean): number;
    mask_rgba(epsilon: number, tau: number, blur_sigma: number, drop_backward: boolean): Uint8Array;
    max_flow(): number;
    constructor(size: number, seed: number, max_displacement: number);
    original_rgba(): Uint8Array;
    overlay_rgba(): Uint8Array;
    psnr(scale: number): number;
    /**
     * PSNR against the original at each of `CURVE_SCALES`.
     */
    psnr_curve(): Float64Array;
    size(): number;
    /**
     * Active warp parameters, e.g. `mouth_height +0.41, jaw_width -0.20`.
     */
    summary(): string;
    undo_rgba(scale: number): Uint8Array;
    warped_rgba(): Uint8Array;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_curve_scales: (a: number) => [number, number];
    readonly demo_mask_mean: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly demo_mask_rgba: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly demo_max_flow: (a: number) => number;
    readonly demo_new: (a: number, b: number, c: number) => [number, number, number];
    readonly demo_original_rgba: (a: number) => [number, number];
    readonly demo_overlay_rgba: (a: number) => [number, number, number, number];
    readonly demo_psnr: (a: number, b: number) => [number, number, number];
    readonly demo_psnr_curve: (a: number) => [number, number, number, number];
    readonly demo_size: (a: number) => number;
    readonly demo_summary: (a: number) => [number, number];
    readonly demo_undo_rgba: (a: number, b: number) => [number, number, number, number];
    readonly demo_warped_rgba: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
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
