//! Residual maps of the hand-eye objectives.

use crate::algebra::{mat4_scale, mat4_add, DualQuaternion, DualQuaternionVector, Mat4};
use crate::func::{JacobianBlock, Part, ResidualMap};

fn diff(a: &Mat4, b: &Mat4) -> Mat4 {
    mat4_add(a, &mat4_scale(b, -1.0))
}

const ZERO: Mat4 = [[0.0; 4]; 4];

/// `r̂_k = â_k x̂ − x̂ b̂_k`.
#[derive(Clone, Debug)]
pub struct AxxbMap {
    pub a: Vec<DualQuaternion>,
    pub b: Vec<DualQuaternion>,
}

impl ResidualMap for AxxbMap {
    fn arity(&self) -> usize {
        1
    }

    fn len(&self) -> usize {
        self.a.len()
    }

    fn residual(&self, k: usize, x: &DualQuaternionVector) -> DualQuaternion {
        self.a[k] * x[0] - x[0] * self.b[k]
    }

    fn jacobian(&self, k: usize, _x: &DualQuaternionVector) -> Vec<JacobianBlock> {
        let (a, b) = (self.a[k], self.b[k]);
        let m = diff(&a.std.left_matrix(), &b.std.right_matrix());
        let md = diff(&a.dual.left_matrix(), &b.dual.right_matrix());
        vec![
            JacobianBlock { var: 0, part: Part::Std, d_std: m, d_dual: md },
            JacobianBlock { var: 0, part: Part::Dual, d_std: ZERO, d_dual: m },
        ]
    }
}

/// `r̂_k = â_k x̂ − ŷ b̂_k` over `(x̂, ŷ)`, or over `x̂` alone when `ŷ` is
/// fixed.
#[derive(Clone, Debug)]
pub struct AxybMap {
    pub a: Vec<DualQuaternion>,
    pub b: Vec<DualQuaternion>,
    pub fixed_y: Option<DualQuaternion>,
}

impl ResidualMap for AxybMap {
    fn arity(&self) -> usize {
        if self.fixed_y.is_some() {
            1
        } else {
            2
        }
    }

    fn len(&self) -> usize {
        self.a.len()
    }

    fn residual(&self, k: usize, x: &DualQuaternionVector) -> DualQuaternion {
        let y = self.fixed_y.unwrap_or_else(|| x[1]);
        self.a[k] * x[0] - y * self.b[k]
    }

    fn jacobian(&self, k: usize, _x: &DualQuaternionVector) -> Vec<JacobianBlock> {
        let (a, b) = (self.a[k], self.b[k]);
        let la = a.std.left_matrix();
        let mut blocks = vec![
            JacobianBlock { var: 0, part: Part::Std, d_std: la, d_dual: a.dual.left_matrix() },
            JacobianBlock { var: 0, part: Part::Dual, d_std: ZERO, d_dual: la },
        ];
        if self.fixed_y.is_none() {
            let rb = mat4_scale(&b.std.right_matrix(), -1.0);
            let rbd = mat4_scale(&b.dual.right_matrix(), -1.0);
            blocks.push(JacobianBlock { var: 1, part: Part::Std, d_std: rb, d_dual: rbd });
            blocks.push(JacobianBlock { var: 1, part: Part::Dual, d_std: ZERO, d_dual: rb });
        }
        blocks
    }
}
