#include "fftp/dataset.hpp"

#include <fstream>
#include <unordered_map>

namespace fftp {

std::string to_string(Task t) {
  return t == Task::kMultilabel ? "multilabel" : "singlelabel";
}

Task task_from_string(const std::string& s) {
  if (s == "multilabel") return Task::kMultilabel;
  if (s == "singlelabel") return Task::kSinglelabel;
  throw InvalidArgument("unknown task: " + s);
}

std::vector<LabeledFile> read_labels_csv(const std::string& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw IoError("cannot open " + csv_path);
  std::vector<LabeledFile> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto at = [&](const std::string& msg) {
      return ParseError(csv_path + ":" + std::to_string(lineno) + ": " + msg);
    };
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw at("expected `path,labels`");
    LabeledFile row;
    row.path = line.substr(0, comma);
    if (row.path.empty()) throw at("empty path");
    std::string rest = line.substr(comma + 1);
    std::size_t start = 0;
    while (start <= rest.size()) {
      const auto semi = rest.find(';', start);
      const std::string label =
          semi == std::string::npos ? rest.substr(start) : rest.substr(start, semi - start);
      if (label.empty()) throw at("empty label");
      row.labels.push_back(label);
      if (semi == std::string::npos) break;
      start = semi + 1;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_labels_csv(const std::string& csv_path, const std::vector<LabeledFile>& rows) {
  std::ofstream out(csv_path);
  if (!out) throw IoError("cannot write " + csv_path);
  for (const auto& row : rows) {
    if (row.path.find_first_of(",\n") != std::string::npos)
      throw InvalidArgument("path not representable in labels.csv: " + row.path);
    if (row.labels.empty()) throw InvalidArgument("row without labels: " + row.path);
    out << row.path << ',';
    for (std::size_t i = 0; i < row.labels.size(); ++i) {
      const auto& label = row.labels[i];
      if (label.empty() || label.find_first_of(",;\n") != std::string::npos)
        throw InvalidArgument("label not representable in labels.csv: " + label);
      if (i) out << ';';
      out << label;
    }
    out << '\n';
  }
  if (!out.flush()) throw IoError("write failed: " + csv_path);
}

MatF remap_targets(const Dataset& d, const std::vector<std::string>& class_names) {
  std::unordered_map<std::string, int> index;
  for (std::size_t c = 0; c < class_names.size(); ++c)
    index.emplace(class_names[c], static_cast<int>(c));
  std::vector<int> col_of(d.class_names.size());
  for (std::size_t c = 0; c < d.class_names.size(); ++c) {
    const auto it = index.find(d.class_names[c]);
    if (it == index.end()) throw InvalidArgument("label not known to model: " + d.class_names[c]);
    col_of[c] = it->second;
  }
  MatF out = MatF::Zero(d.targets.rows(), static_cast<Eigen::Index>(class_names.size()));
  for (Eigen::Index i = 0; i < d.targets.rows(); ++i)
    for (Eigen::Index c = 0; c < d.targets.cols(); ++c)
      out(i, col_of[static_cast<std::size_t>(c)]) = d.targets(i, c);
  return out;
}

}  // namespace fftp
