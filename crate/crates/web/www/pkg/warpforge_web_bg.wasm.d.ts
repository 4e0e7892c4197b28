/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demo_free: (a: number, b: number) => void;
export const demo_curve_scales: (a: number) => [number, number];
export const demo_mask_mean: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const demo_mask_rgba: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const demo_max_flow: (a: number) => number;
export const demo_new: (a: number, b: number, c: number) => [number, number, number];
export const demo_original_rgba: (a: number) => [number, number];
export const demo_overlay_rgba: (a: number) => [number, number, number, number];
export const demo_psnr: (a: number, b: number) => [number, number, number];
export const demo_psnr_curve: (a: number) => [number, number, number, number];
export const demo_size: (a: number) => number;
export const demo_summary: (a: number) => [number, number];
export const demo_undo_rgba: (a: number, b: number) => [number, number, number, number];
export const demo_warped_rgba: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
