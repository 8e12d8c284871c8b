//! Bilinear finite elements on the truncated strip: mesh, boundary data and
//! assembly of the weak form `0 = sum w |det J| h(q) grad psi . grad phi`.

pub mod assembly;
pub mod bcs;
pub mod mesh;
pub mod quadrature;

pub use assembly::{assemble, Assembled, AssemblyError, Problem, StencilMatrix};
pub use bcs::{
    build_constraints, BcError, BoundarySpec, Constraints, EndCondition, Profile, ReferenceKind,
};
pub use mesh::{build_mesh, MeshError, QuadPoint, StripMesh};
