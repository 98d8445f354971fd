/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_modes_free: (a: number, b: number) => void;
export const dimension_bound: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const modes_curves: (a: number) => [number, number, number, number];
export const modes_eigenvalues: (a: number) => [number, number];
export const modes_field: (a: number, b: number) => [number, number, number, number];
export const modes_measure: (a: number) => number;
export const modes_new: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
export const modes_nodes_x: (a: number) => number;
export const modes_nodes_y: (a: number) => number;
export const modes_speed: (a: number, b: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
