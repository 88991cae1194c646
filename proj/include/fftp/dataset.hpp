#pragma once

#include <string>
#include <vector>

#include "fftp/common.hpp"
#include "fftp/wav.hpp"

namespace fftp {

enum class Task { kMultilabel, kSinglelabel };

std::string to_string(Task t);
Task task_from_string(const std::string& s);

// Labeled audio collection. targets is n x C multi-hot (one-hot for
// single-label tasks); class_names[c] names column c.
struct Dataset {
  std::vector<Waveform> waves;
  MatF targets;
  std::vector<std::string> class_names;

  int size() const { return static_cast<int>(waves.size()); }
  int n_classes() const { return static_cast<int>(class_names.size()); }
};

// labels.csv rows: `path,label1;label2`. No header. Paths must not contain
// commas; labels must not contain commas or semicolons.
struct LabeledFile {
  std::string path;
  std::vector<std::string> labels;
};

std::vector<LabeledFile> read_labels_csv(const std::string& csv_path);
void write_labels_csv(const std::string& csv_path, const std::vector<LabeledFile>& rows);

// Re-expresses targets in a caller-fixed class order (e.g. a trained model's
// class map). Throws InvalidArgument on a label missing from class_names.
MatF remap_targets(const Dataset& d, const std::vector<std::string>& class_names);

}  // namespace fftp
