//! Discrete exterior calculus for self-adjoint curl operators on
//! tetrahedral meshes.

pub mod complex;
pub mod curlcurl;
pub mod eigen;
pub mod error;
pub mod exact;
pub mod forms;
pub mod hodge;
pub mod homology;
pub mod linalg;
pub mod meshgen;
pub mod sparse;
pub mod spectral;
pub mod symplectic;

pub use complex::{OrientedComplex3, Point, SurfaceComplex};
pub use error::{HodgeError, HomologyError, MeshError, SpectralError, SymplecticError};
pub use meshgen::TetMesh;

impl TetMesh {
    /// Builds the oriented complex of this mesh.
    pub fn complex(&self) -> Result<OrientedComplex3, MeshError> {
        OrientedComplex3::build(self.vertices.clone(), &self.tets)
    }
}
