/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_simulation_free: (a: number, b: number) => void;
export const grid_points: (a: number, b: number) => [number, number, number, number];
export const lowest_eigenvalues: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const p_variation: (a: number, b: number, c: number) => [number, number, number];
export const simulation_advance: (a: number, b: number, c: number) => [number, number];
export const simulation_energy: (a: number) => number;
export const simulation_mass: (a: number) => number;
export const simulation_modulation: (a: number) => [number, number];
export const simulation_new: (a: number, b: number, c: number, d: number, e: number, f: bigint) => [number, number, number];
export const simulation_time: (a: number) => number;
export const simulation_values: (a: number) => [number, number];
export const soliton_profile: (a: number, b: number, c: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_start: () => void;
