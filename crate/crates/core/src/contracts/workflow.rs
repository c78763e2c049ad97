//! Workflow activities, stages and the transition rule that links them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Something a participant reports having done to an asset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkflowActivity {
    SelectData,
    PreprocessData,
    EngineerFeatures,
    Train,
    Evaluate,
    Validate,
    Deploy,
    Register,
    Publish,
}

/// Lifecycle position of an asset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkflowStage {
    Registered,
    DataSelected,
    Preprocessed,
    FeaturesEngineered,
    Trained,
    Evaluated,
    Validated,
    Deployed,
    Published,
}

impl WorkflowActivity {
    /// The seven model activities, in workflow order.
    pub const MODEL_ACTIVITIES: [WorkflowActivity; 7] = [
        WorkflowActivity::SelectData,
        WorkflowActivity::PreprocessData,
        WorkflowActivity::EngineerFeatures,
        WorkflowActivity::Train,
        WorkflowActivity::Evaluate,
        WorkflowActivity::Validate,
        WorkflowActivity::Deploy,
    ];

    pub const ALL: [WorkflowActivity; 9] = [
        WorkflowActivity::SelectData,
        WorkflowActivity::PreprocessData,
        WorkflowActivity::EngineerFeatures,
        WorkflowActivity::Train,
        WorkflowActivity::Evaluate,
        WorkflowActivity::Validate,
        WorkflowActivity::Deploy,
        WorkflowActivity::Register,
        WorkflowActivity::Publish,
    ];

    pub fn tag(self) -> u64 {
        self as u64
    }

    pub fn from_tag(tag: u64) -> Option<Self> {
        Self::ALL.get(usize::try_from(tag).ok()?).copied()
    }

    /// Contract method name that reports this activity.
    pub fn method_name(self) -> &'static str {
        match self {
            WorkflowActivity::SelectData => "select_data",
            WorkflowActivity::PreprocessData => "preprocess_data",
            WorkflowActivity::EngineerFeatures => "engineer_features",
            WorkflowActivity::Train => "train",
            WorkflowActivity::Evaluate => "evaluate",
            WorkflowActivity::Validate => "validate",
            WorkflowActivity::Deploy => "deploy",
            WorkflowActivity::Register => "register",
            WorkflowActivity::Publish => "publish",
        }
    }

    pub fn from_method_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.method_name() == name)
    }

    pub fn is_model_activity(self) -> bool {
        Self::MODEL_ACTIVITIES.contains(&self)
    }
}

impl fmt::Display for WorkflowActivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.method_name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown workflow activity `{0}`")]
pub struct UnknownActivity(pub String);

impl FromStr for WorkflowActivity {
    type Err = UnknownActivity;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let normalized = s.trim().to_ascii_lowercase().replace('-', "_");
        Self::from_method_name(&normalized).ok_or_else(|| UnknownActivity(s.to_owned()))
    }
}

impl WorkflowStage {
    pub const ALL: [WorkflowStage; 9] = [
        WorkflowStage::Registered,
        WorkflowStage::DataSelected,
        WorkflowStage::Preprocessed,
        WorkflowStage::FeaturesEngineered,
        WorkflowStage::Trained,
        WorkflowStage::Evaluated,
        WorkflowStage::Validated,
        WorkflowStage::Deployed,
        WorkflowStage::Published,
    ];

    pub fn tag(self) -> u64 {
        self as u64
    }

    pub fn from_tag(tag: u64) -> Option<Self> {
        Self::ALL.get(usize::try_from(tag).ok()?).copied()
    }
}

impl fmt::Display for WorkflowStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            WorkflowStage::Registered => "registered",
            WorkflowStage::DataSelected => "data_selected",
            WorkflowStage::Preprocessed => "preprocessed",
            WorkflowStage::FeaturesEngineered => "features_engineered",
            WorkflowStage::Trained => "trained",
            WorkflowStage::Evaluated => "evaluated",
            WorkflowStage::Validated => "validated",
            WorkflowStage::Deployed => "deployed",
            WorkflowStage::Published => "published",
        };
        f.write_str(s)
    }
}

/// Which stage an activity leads to from a given stage, if it is allowed.
///
/// Contracts only consult the workflow through this trait, so an agreed
/// non-linear workflow can be dropped in without touching contract code.
pub trait WorkflowRules {
    fn next_stage(&self, stage: WorkflowStage, activity: WorkflowActivity)
        -> Option<WorkflowStage>;
}

/// Model workflow: each activity advances exactly one stage, in order,
/// and publication follows deployment.
#[derive(Debug, Clone, Copy, Default)]
pub struct LinearModelWorkflow;

impl WorkflowRules for LinearModelWorkflow {
    fn next_stage(
        &self,
        stage: WorkflowStage,
        activity: WorkflowActivity,
    ) -> Option<WorkflowStage> {
        use WorkflowActivity as A;
        use WorkflowStage as S;
        let (from, to) = match activity {
            A::SelectData => (S::Registered, S::DataSelected),
            A::PreprocessData => (S::DataSelected, S::Preprocessed),
            A::EngineerFeatures => (S::Preprocessed, S::FeaturesEngineered),
            A::Train => (S::FeaturesEngineered, S::Trained),
            A::Evaluate => (S::Trained, S::Evaluated),
            A::Validate => (S::Evaluated, S::Validated),
            A::Deploy => (S::Validated, S::Deployed),
            A::Publish => (S::Deployed, S::Published),
            A::Register => return None,
        };
        (stage == from).then_some(to)
    }
}

/// Dataset workflow: registered, then published.
#[derive(Debug, Clone, Copy, Default)]
pub struct DatasetWorkflow;

impl WorkflowRules for DatasetWorkflow {
    fn next_stage(
        &self,
        stage: WorkflowStage,
        activity: WorkflowActivity,
    ) -> Option<WorkflowStage> {
        match (stage, activity) {
            (WorkflowStage::Registered, WorkflowActivity::Publish) => {
                Some(WorkflowStage::Published)
            }
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_order_reaches_deployed() {
        let stage = WorkflowActivity::MODEL_ACTIVITIES
            .iter()
            .try_fold(WorkflowStage::Registered, |s, a| {
                LinearModelWorkflow.next_stage(s, *a)
            });
        assert_eq!(stage, Some(WorkflowStage::Deployed));
    }

    #[test]
    fn skipping_a_step_is_illegal() {
        assert_eq!(
            LinearModelWorkflow.next_stage(WorkflowStage::Registered, WorkflowActivity::Train),
            None
        );
    }

    #[test]
    fn tags_round_trip() {
        for a in WorkflowActivity::ALL {
            assert_eq!(WorkflowActivity::from_tag(a.tag()), Some(a));
            assert_eq!(a.method_name().parse::<WorkflowActivity>().unwrap(), a);
        }
        for s in WorkflowStage::ALL {
            assert_eq!(WorkflowStage::from_tag(s.tag()), Some(s));
        }
        assert_eq!(WorkflowActivity::from_tag(9), None);
    }

    #[test]
    fn activity_names_are_forgiving() {
        assert_eq!(
            "Select-Data".parse::<WorkflowActivity>().unwrap(),
            WorkflowActivity::SelectData
        );
        assert!("fly".parse::<WorkflowActivity>().is_err());
    }
}
