//! Dyadic cubes, Haar wavelets, product square functions and the atomic
//! decomposition of product Hardy spaces on finite quasi-metric measure
//! spaces, with brute-force verification at every step.

pub mod atoms;
pub mod blocks;
pub mod certify;
pub mod dyadic;
pub mod error;
pub mod generate;
pub mod grid;
pub mod journe;
pub mod maximal;
pub mod product;
pub mod space;
pub mod wavelet;

pub use atoms::{
    atom_hp_bound, atomic_decompose, equivalence_report, verify_atom, AtomCertificate, AtomicDecomposition,
    ProductAtom,
};
pub use blocks::{building_blocks, BuildingBlockSet};
pub use dyadic::{BuildOptions, CubeId, DyadicSystem, GridMode, RegularFamily};
pub use error::{Error, Result};
pub use grid::{GridFunction, OpenSet};
pub use journe::{journe_check, maximal_rectangles, MaximalRectangleFamily};
pub use maximal::{enlarge, epsilon0, level_sets, strong_maximal, LevelSetFamily};
pub use product::{hp_seminorm, product_transform, square_function, ProductCoefficients, ProductSpace, RectangleKey};
pub use space::{load_space, FiniteSpace, Metric};
pub use wavelet::{build_haar, BasisId, WaveletBasis};
