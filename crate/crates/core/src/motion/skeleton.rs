use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The five part-wise joint groups of the hierarchical encoder.
///
/// The sixth encoder structure is the whole body and has no entry here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodyPart {
    LeftArm,
    RightArm,
    LeftLeg,
    RightLeg,
    Trunk,
}

impl BodyPart {
    pub const ALL: [BodyPart; 5] = [
        BodyPart::LeftArm,
        BodyPart::RightArm,
        BodyPart::LeftLeg,
        BodyPart::RightLeg,
        BodyPart::Trunk,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BodyPart::LeftArm => "left_arm",
            BodyPart::RightArm => "right_arm",
            BodyPart::LeftLeg => "left_leg",
            BodyPart::RightLeg => "right_leg",
            BodyPart::Trunk => "trunk",
        }
    }
}

impl fmt::Display for BodyPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Joint hierarchy with rest offsets and the body-part partition.
///
/// `parents[j]` is `None` for the single root. `facing_joints` names the
/// (left hip, right hip) pair whose horizontal difference defines the facing
/// direction during standardization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skeleton {
    pub name: String,
    pub joint_names: Vec<String>,
    pub parents: Vec<Option<usize>>,
    pub rest_offsets: Vec<[f64; 3]>,
    pub partition: BTreeMap<BodyPart, Vec<usize>>,
    pub facing_joints: (usize, usize),
}

impl Skeleton {
    /// Builds a skeleton and checks every structural invariant.
    pub fn new(
        name: impl Into<String>,
        joint_names: Vec<String>,
        parents: Vec<Option<usize>>,
        rest_offsets: Vec<[f64; 3]>,
        partition: BTreeMap<BodyPart, Vec<usize>>,
        facing_joints: (usize, usize),
    ) -> Result<Self> {
        let skeleton = Skeleton {
            name: name.into(),
            joint_names,
            parents,
            rest_offsets,
            partition,
            facing_joints,
        };
        skeleton.validate()?;
        Ok(skeleton)
    }

    pub fn joint_count(&self) -> usize {
        self.joint_names.len()
    }

    pub fn bone_count(&self) -> usize {
        self.joint_count().saturating_sub(1)
    }

    pub fn root(&self) -> usize {
        self.parents
            .iter()
            .position(Option::is_none)
            .expect("validated skeleton has a root")
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joint_names.iter().position(|n| n == name)
    }

    pub fn part(&self, part: BodyPart) -> &[usize] {
        self.partition.get(&part).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Non-root joints in index order; bone `k` connects `parents[j]` to `j`
    /// for the `k`-th entry.
    pub fn bones(&self) -> Vec<(usize, usize)> {
        self.parents
            .iter()
            .enumerate()
            .filter_map(|(j, p)| p.map(|p| (p, j)))
            .collect()
    }

    pub fn rest_bone_lengths(&self) -> Vec<f64> {
        self.bones()
            .into_iter()
            .map(|(_, j)| norm3(self.rest_offsets[j]))
            .collect()
    }

    /// Joints ordered so that every parent precedes its children.
    pub fn topological_order(&self) -> Vec<usize> {
        let n = self.joint_count();
        let mut children = vec![Vec::new(); n];
        for (j, p) in self.parents.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(j);
            }
        }
        let mut order = Vec::with_capacity(n);
        let mut stack = vec![self.root()];
        while let Some(j) = stack.pop() {
            order.push(j);
            stack.extend(children[j].iter().rev());
        }
        order
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.joint_names.len();
        if n == 0 {
            return Err(Error::Structural("skeleton has no joints".into()));
        }
        if self.parents.len() != n || self.rest_offsets.len() != n {
            return Err(Error::Structural(format!(
                "skeleton '{}': {} names, {} parents, {} offsets",
                self.name,
                n,
                self.parents.len(),
                self.rest_offsets.len()
            )));
        }
        let roots = self.parents.iter().filter(|p| p.is_none()).count();
        if roots != 1 {
            return Err(Error::Structural(format!(
                "skeleton '{}' has {roots} roots, expected exactly one",
                self.name
            )));
        }
        for (j, p) in self.parents.iter().enumerate() {
            if let Some(p) = *p {
                if p >= n {
                    return Err(Error::Structural(format!(
                        "joint {j} has out-of-range parent {p}"
                    )));
                }
            }
        }
        // Every joint must reach the root within n steps, otherwise there is a cycle.
        for start in 0..n {
            let mut j = start;
            let mut steps = 0;
            while let Some(p) = self.parents[j] {
                j = p;
                steps += 1;
                if steps > n {
                    return Err(Error::Structural(format!(
                        "joint '{}' is on a parent cycle",
                        self.joint_names[start]
                    )));
                }
            }
        }
        for (j, p) in self.parents.iter().enumerate() {
            let off = self.rest_offsets[j];
            if off.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data(format!("joint {j} has non-finite rest offset")));
            }
            if p.is_some() && norm3(off) <= 0.0 {
                return Err(Error::Structural(format!(
                    "bone to joint '{}' has zero rest length",
                    self.joint_names[j]
                )));
            }
        }

        let mut owner = vec![None; n];
        for part in BodyPart::ALL {
            for &j in self.part(part) {
                if j >= n {
                    return Err(Error::Structural(format!(
                        "partition {part} references joint {j} of {n}"
                    )));
                }
                if let Some(prev) = owner[j].replace(part) {
                    return Err(Error::Structural(format!(
                        "joint '{}' assigned to both {prev} and {part}",
                        self.joint_names[j]
                    )));
                }
            }
        }
        if let Some(j) = owner.iter().position(Option::is_none) {
            return Err(Error::Structural(format!(
                "joint '{}' is not assigned to any body part",
                self.joint_names[j]
            )));
        }
        let (l, r) = self.facing_joints;
        if l >= n || r >= n || l == r {
            return Err(Error::Structural(format!(
                "invalid facing joint pair ({l}, {r})"
            )));
        }
        Ok(())
    }
}

pub(crate) fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}


#[cfg(test)]
mod tests {
    use super::fixtures::six_joint;
    use super::*;

    #[test]
    fn topological_order_puts_parents_first() {
        let s = six_joint();
        let order = s.topological_order();
        assert_eq!(order.len(), 6);
        for (pos, &j) in order.iter().enumerate() {
            if let Some(p) = s.parents[j] {
                assert!(order[..pos].contains(&p));
            }
        }
    }

    #[test]
    fn rejects_two_roots() {
        let mut s = six_joint();
        s.parents[5] = None;
        assert!(matches!(s.validate(), Err(Error::Structural(_))));
    }

    #[test]
    fn rejects_cycles() {
        let mut s = six_joint();
        s.parents[5] = Some(3);
        assert!(matches!(s.validate(), Err(Error::Structural(_))));
    }

    #[test]
    fn rejects_overlapping_and_missing_partition() {
        let mut s = six_joint();
        s.partition.get_mut(&BodyPart::Trunk).unwrap().push(1);
        assert!(s.validate().is_err());

        let mut s = six_joint();
        s.partition.get_mut(&BodyPart::Trunk).unwrap().retain(|&j| j != 5);
        assert!(s.validate().is_err());
    }

    #[test]
    fn rejects_zero_length_bone() {
        let mut s = six_joint();
        s.rest_offsets[4] = [0.0; 3];
        assert!(s.validate().is_err());
    }
}
