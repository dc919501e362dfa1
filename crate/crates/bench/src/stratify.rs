//! Difficulty levels from annotated package features.

use crate::manifest::{Difficulty, StratificationFeatures};

/// Level 1 needs a clear entry point and run order, at most two edited
/// files, outputs saved to disk and a direct mapping from outputs to
/// paper items. Level 2 relaxes the edit count to four and drops the
/// saved-output requirement. Everything else is level 3.
pub fn stratify(f: &StratificationFeatures) -> Difficulty {
    let files = f.files_needing_modification;
    if f.clear_entry_and_order && files <= 2 && f.outputs_explicitly_saved && f.direct_output_mapping {
        Difficulty::Level1
    } else if f.clear_entry_and_order && files <= 4 && f.direct_output_mapping {
        Difficulty::Level2
    } else {
        Difficulty::Level3
    }
}
