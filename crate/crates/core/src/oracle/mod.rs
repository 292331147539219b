//! Ground truth for tests and instance generation: exact rational linear
//! algebra and seeded generators whose answers are known by construction.

pub mod generators;
pub mod rational;

pub use generators::{
    haar_unitary, haar_unitary_in_algebra, random_no_instance, random_yes_instance, PlantedInstance,
};
pub use rational::{exact_determinant, exact_nullspace_dimension, GaussianRational};
