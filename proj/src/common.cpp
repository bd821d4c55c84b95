#include "badm/common.hpp"

namespace badm {

std::vector<std::pair<int, int>> slice_spans(int n_frames, int k) {
  if (k < 1) fail(ErrorKind::validation, "NotDivisible", "slice count must be >= 1, got ", k);
  if (n_frames < 1)
    fail(ErrorKind::validation, "NotDivisible", "sequence length must be >= 1, got ", n_frames);
  if (n_frames % k != 0)
    fail(ErrorKind::validation, "NotDivisible", "sequence length ", n_frames,
         " not divisible by slice count ", k);
  const int len = n_frames / k;
  std::vector<std::pair<int, int>> spans(k);
  for (int i = 0; i < k; ++i) spans[i] = {i * len, (i + 1) * len};
  return spans;
}

}  // namespace badm
