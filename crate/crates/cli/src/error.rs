use std::process::ExitCode;

use dosescreen::pipeline::PipelineError;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Usage,
    Data,
    Training,
}

impl Kind {
    pub fn exit_code(self) -> ExitCode {
        ExitCode::from(match self {
            Kind::Usage => 2,
            Kind::Data => 3,
            Kind::Training => 4,
        })
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
    pub flag: Option<String>,
}

impl CliError {
    pub fn usage(flag: &str, message: impl Into<String>) -> Self {
        CliError {
            kind: Kind::Usage,
            message: format!("{flag}: {}", message.into()),
            flag: Some(flag.to_string()),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError {
            kind: Kind::Data,
            message: message.into(),
            flag: None,
        }
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            kind: Kind,
            message: &'a str,
            #[serde(skip_serializing_if = "Option::is_none")]
            flag: Option<&'a str>,
        }
        #[derive(Serialize)]
        struct Doc<'a> {
            schema_version: u32,
            error: Body<'a>,
        }
        serde_json::to_string(&Doc {
            schema_version: dosescreen::SCHEMA_VERSION,
            error: Body {
                kind: self.kind,
                message: &self.message,
                flag: self.flag.as_deref(),
            },
        })
        .expect("error serializes")
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        use PipelineError as P;
        let kind = match &e {
            P::Usage(_) => Kind::Usage,
            P::Gbdt(_) | P::Eval(_) | P::Tune(_) | P::Experiment(_) => Kind::Training,
            P::Data(_) | P::Corpus(_) | P::Vectorize(_) | P::Io { .. } => Kind::Data,
        };
        CliError {
            kind,
            message: e.to_string(),
            flag: None,
        }
    }
}

macro_rules! via_pipeline {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                PipelineError::from(e).into()
            }
        })*
    };
}

via_pipeline!(
    dosescreen::corpus::CorpusError,
    dosescreen::vectorize::VectorizeError,
    dosescreen::gbdt::GbdtError,
    dosescreen::evalx::EvalError,
    dosescreen::tune::TuneError,
    dosescreen::experiments::ExperimentError
);
