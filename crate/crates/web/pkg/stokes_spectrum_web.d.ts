/* tslint:disable */
/* eslint-disable */

/**
 * Eigenpairs of one solve, sampled on the bounding-box nodes.
 */
export class Modes {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Bound curves of this spectrum as JSON, see [`curves_for`].
     */
    curves(): string;
    eigenvalues(): Float64Array;
    /**
     * Mode `k` (0-based) row-major in y: the eigenfunction, or the stream
     * function for Stokes.
     */
    field(k: number): Float64Array;
    /**
     * Solves `problem` ("laplace" | "stokes") on `shape` ("square" |
     * "rectangle" | "disk") with `nx` cells across and `m` modes.
     */
    constructor(problem: string, shape: string, nx: number, m: number);
    /**
     * Velocity magnitude of Stokes mode `k`; empty for the Laplacian.
     */
    speed(k: number): Float64Array;
    readonly measure: number;
    readonly nodes_x: number;
    readonly nodes_y: number;
}

/**
 * Attractor-dimension bound for `(ν, ‖f‖, |Ω|, λ₁)` as JSON.
 */
export function dimension_bound(nu: number, f_norm: number, measure: number, lambda1: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_modes_free: (a: number, b: number) => void;
    readonly dimension_bound: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly modes_curves: (a: number) => [number, number, number, number];
    readonly modes_eigenvalues: (a: number) => [number, number];
    readonly modes_field: (a: number, b: number) => [number, number, number, number];
    readonly modes_measure: (a: number) => number;
    readonly modes_new: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly modes_nodes_x: (a: number) => number;
    readonly modes_nodes_y: (a: number) => number;
    readonly modes_speed: (a: number, b: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
