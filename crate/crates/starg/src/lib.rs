//! Group-algebraic tensor framework: finite groups, their irreducible
//! representations, generalized Fourier transforms, a matrix-like tensor
//! product over the group algebra, its SVD, and invariant feature pipelines
//! for regression on group-structured data.

pub mod data;
pub mod discovery;
pub mod error;
pub mod features;
pub mod group;
pub mod gtensor;
pub mod irreps;
pub mod linalg;
pub mod parallel;
pub mod perirrep;
pub mod regression;
pub mod rng;
pub mod svd;

pub use data::{
    dipole_vector, featurize_octahedral, featurize_rotational, featurize_with_action,
    fold_product_batch, gen_discovery_dataset, gen_octahedral_dataset, gen_product_dataset,
    gen_synthetic_cyclic, geometric_action, parse_qm9_xyz, parse_qm9_xyz_str, rotate_molecule,
    translate_molecule, write_xyz, write_xyz_file, FactorSide, LabeledDataset, Molecule,
    Qm9Properties, QM9_PROPERTY_NAMES,
};
pub use discovery::{
    discover_molecules, discover_tensor, factorizations, small_groups, CandidateScore,
    DiscoveryReport, NU_FLOOR,
};
pub use error::{Error, Result};
pub use features::{
    apply_features, best_reshape, fit_features, DesignMatrix, FeatureParams, SampleBatch,
};
pub use group::{build_group, convolution_tensor, verify_group, AxiomReport, FiniteGroup, GroupSpec};
pub use gtensor::{
    fourier_blocks, frobenius_norm, identity_tensor, inverse_fourier, left_action, right_action,
    starg_product, starg_product_direct, starg_transpose, FourierBlocks, GTensor,
};
pub use irreps::{
    cg_multiplicity, fourier_matrix, irrep_table, sym2_multiplicity, verify_irreps, FourierMatrix,
    Irrep, IrrepReport, IrrepTable,
};
pub use perirrep::{per_irrep_analysis, per_irrep_power, PerIrrepReport, RATIO_FLOOR};
pub use regression::{
    r2_score, ridge_fit, rmse, rotation_variance, run_pipeline, seed_triple, select_lambda,
    split_indices, PipelineModel, PipelineReport, RidgeModel, SeedReport, SplitIndices,
    DEFAULT_LAMBDA_GRID,
};
pub use svd::{starg_rank, starg_svd, truncation_error, StarGSVD};
