#pragma once

namespace dapinn::cli {

/// Contents of data/reference_values.csv (published table values used for
/// side-by-side display only, never for computation).
const char* reference_values_csv();

}  // namespace dapinn::cli
