/* tslint:disable */
/* eslint-disable */

export class Simulation {
    free(): void;
    [Symbol.dispose](): void;
    advance(duration: number, dt: number): void;
    energy(): number;
    mass(): number;
    modulation(): Float64Array;
    constructor(n: number, length: number, c: number, y: number, amplitude: number, seed: bigint);
    time(): number;
    values(): Float64Array;
}

export function grid_points(n: number, length: number): Float64Array;

export function lowest_eigenvalues(c: number, n: number, length: number, k: number): Float64Array;

export function p_variation(series: Float64Array, p: number): number;

export function soliton_profile(c: number, n: number, length: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_simulation_free: (a: number, b: number) => void;
    readonly grid_points: (a: number, b: number) => [number, number, number, number];
    readonly lowest_eigenvalues: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly p_variation: (a: number, b: number, c: number) => [number, number, number];
    readonly simulation_advance: (a: number, b: number, c: number) => [number, number];
    readonly simulation_energy: (a: number) => number;
    readonly simulation_mass: (a: number) => number;
    readonly simulation_modulation: (a: number) => [number, number];
    readonly simulation_new: (a: number, b: number, c: number, d: number, e: number, f: bigint) => [number, number, number];
    readonly simulation_time: (a: number) => number;
    readonly simulation_values: (a: number) => [number, number];
    readonly soliton_profile: (a: number, b: number, c: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
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
