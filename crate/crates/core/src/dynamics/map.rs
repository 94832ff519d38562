use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dynamics::rational::Rational;
use crate::dynamics::shuffle::{BoxShuffle, Piece, ShuffleParams};
use crate::error::Result;
use crate::surface::{SurfacePoint, Turn};

/// An invertible area-preserving map of the cylinder, as an expression tree.
///
/// `Compose([a, b, c])` is `a ∘ b ∘ c`: the last entry acts first.
#[derive(Clone, Debug)]
pub enum AreaMap {
    Rotation { alpha: Rational, step: Turn },
    Shuffle(Arc<BoxShuffle>),
    Compose(Vec<AreaMap>),
    Inverse(Box<AreaMap>),
}

impl AreaMap {
    pub fn identity() -> AreaMap {
        AreaMap::Compose(Vec::new())
    }

    pub fn rotation(alpha: Rational) -> AreaMap {
        let step = alpha.to_turn();
        AreaMap::Rotation { alpha, step }
    }

    pub fn box_shuffle(params: ShuffleParams) -> Result<AreaMap> {
        Ok(AreaMap::Shuffle(Arc::new(BoxShuffle::new(params)?)))
    }

    pub fn compose(parts: Vec<AreaMap>) -> AreaMap {
        AreaMap::Compose(parts)
    }

    pub fn inverse(self) -> AreaMap {
        match self {
            AreaMap::Inverse(inner) => *inner,
            m => AreaMap::Inverse(Box::new(m)),
        }
    }

    /// True when the tree contains rotations only, so the Jacobian is the identity.
    pub fn is_rigid(&self) -> bool {
        match self {
            AreaMap::Rotation { .. } => true,
            AreaMap::Shuffle(_) => false,
            AreaMap::Compose(v) => v.iter().all(AreaMap::is_rigid),
            AreaMap::Inverse(m) => m.is_rigid(),
        }
    }

    /// Number of shuffle nodes in the tree.
    pub fn shuffle_count(&self) -> usize {
        match self {
            AreaMap::Rotation { .. } => 0,
            AreaMap::Shuffle(_) => 1,
            AreaMap::Compose(v) => v.iter().map(AreaMap::shuffle_count).sum(),
            AreaMap::Inverse(m) => m.shuffle_count(),
        }
    }

    pub fn eval(&self, p: &SurfacePoint) -> Result<SurfacePoint> {
        match self {
            AreaMap::Rotation { step, .. } => Ok(SurfacePoint::from_turn(p.theta.wrapping_add(*step), p.y, p.tag)),
            AreaMap::Shuffle(g) => g.eval(p),
            AreaMap::Compose(v) => v.iter().rev().try_fold(*p, |x, m| m.eval(&x)),
            AreaMap::Inverse(m) => m.eval_inv(p),
        }
    }

    pub fn eval_inv(&self, p: &SurfacePoint) -> Result<SurfacePoint> {
        match self {
            AreaMap::Rotation { step, .. } => Ok(SurfacePoint::from_turn(p.theta.wrapping_sub(*step), p.y, p.tag)),
            AreaMap::Shuffle(g) => g.eval_inv(p),
            AreaMap::Compose(v) => v.iter().try_fold(*p, |x, m| m.eval_inv(&x)),
            AreaMap::Inverse(m) => m.eval(p),
        }
    }

    /// Forward evaluation that also records the shuffle piece used at each layer.
    pub fn eval_traced(&self, p: &SurfacePoint, trace: &mut Vec<Piece>) -> Result<SurfacePoint> {
        match self {
            AreaMap::Rotation { .. } => self.eval(p),
            AreaMap::Shuffle(g) => {
                let (img, piece) = g.eval_piece(p)?;
                trace.push(piece);
                Ok(img)
            }
            AreaMap::Compose(v) => {
                let mut x = *p;
                for m in v.iter().rev() {
                    x = m.eval_traced(&x, trace)?;
                }
                Ok(x)
            }
            AreaMap::Inverse(m) => m.eval_inv_traced(p, trace),
        }
    }

    fn eval_inv_traced(&self, p: &SurfacePoint, trace: &mut Vec<Piece>) -> Result<SurfacePoint> {
        match self {
            AreaMap::Rotation { .. } => self.eval_inv(p),
            AreaMap::Shuffle(g) => {
                let pre = g.eval_inv(p)?;
                trace.push(g.piece(&pre));
                Ok(pre)
            }
            AreaMap::Compose(v) => {
                let mut x = *p;
                for m in v {
                    x = m.eval_inv_traced(&x, trace)?;
                }
                Ok(x)
            }
            AreaMap::Inverse(m) => m.eval_traced(p, trace),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum AreaMapRepr {
    Rotation(Rational),
    BoxShuffle(ShuffleParams),
    Compose(Vec<AreaMapRepr>),
    Inverse(Box<AreaMapRepr>),
}

impl From<&AreaMap> for AreaMapRepr {
    fn from(m: &AreaMap) -> Self {
        match m {
            AreaMap::Rotation { alpha, .. } => AreaMapRepr::Rotation(alpha.clone()),
            AreaMap::Shuffle(g) => AreaMapRepr::BoxShuffle(g.params().clone()),
            AreaMap::Compose(v) => AreaMapRepr::Compose(v.iter().map(AreaMapRepr::from).collect()),
            AreaMap::Inverse(inner) => AreaMapRepr::Inverse(Box::new(AreaMapRepr::from(&**inner))),
        }
    }
}

impl TryFrom<AreaMapRepr> for AreaMap {
    type Error = crate::error::Error;

    fn try_from(r: AreaMapRepr) -> Result<Self> {
        Ok(match r {
            AreaMapRepr::Rotation(a) => AreaMap::rotation(a),
            AreaMapRepr::BoxShuffle(p) => AreaMap::box_shuffle(p)?,
            AreaMapRepr::Compose(v) => AreaMap::Compose(v.into_iter().map(AreaMap::try_from).collect::<Result<_>>()?),
            AreaMapRepr::Inverse(inner) => AreaMap::Inverse(Box::new(AreaMap::try_from(*inner)?)),
        })
    }
}

impl Serialize for AreaMap {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        AreaMapRepr::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for AreaMap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        AreaMap::try_from(AreaMapRepr::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}
