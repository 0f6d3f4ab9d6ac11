use std::fmt;

/// Exit code for invalid input or configuration.
pub const EXIT_INPUT: i32 = 2;
/// Exit code for everything else that goes wrong.
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INTERNAL,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<periodica::Error> for Failure {
    fn from(e: periodica::Error) -> Self {
        if e.is_input_error() {
            Self::input(e.to_string())
        } else {
            Self::internal(e.to_string())
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Self::internal(format!("serialization failed: {e}"))
    }
}
