#include "rulebo/artifacts.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <sstream>

#include "rulebo/errors.hpp"

namespace rulebo {

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

namespace {

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

void write_assignment(std::ostringstream& os, const std::vector<std::string>& columns,
                      const Assignment& a) {
  for (const auto& name : columns) {
    os << ',';
    auto it = a.find(name);
    if (it != a.end()) os << csv_escape(format_value(it->second));
  }
}

std::string num(double v) { return format_value(Value(v)); }

}  // namespace

std::vector<std::string> assignment_columns(const Checkpoint& ckpt) {
  std::vector<std::string> cols;
  for (const auto& d : ckpt.space.dimensions()) cols.push_back(d.name);
  for (const auto& r : ckpt.records)
    for (const auto& [name, value] : r.assignment)
      if (std::find(cols.begin(), cols.end(), name) == cols.end()) cols.push_back(name);
  return cols;
}

std::string cycles_csv(const Checkpoint& ckpt) {
  const auto cols = assignment_columns(ckpt);
  std::ostringstream os;
  os << "cycle";
  for (const auto& c : cols) os << ',' << csv_escape(c);
  os << ",objective,issues,actions,wall_clock_s\n";
  for (const auto& r : ckpt.records) {
    os << r.cycle;
    write_assignment(os, cols, r.assignment);
    os << ',' << num(r.objective) << ',' << csv_escape(format_report(r.issues)) << ','
       << csv_escape(join(r.actions, ";")) << ',' << num(r.wall_clock_s) << '\n';
  }
  return os.str();
}

std::string summary_csv(const Checkpoint& ckpt) {
  const auto cols = assignment_columns(ckpt);
  std::ostringstream os;
  os << "cycle,branch";
  for (const auto& c : cols) os << ',' << csv_escape(c);
  os << ",directives,objective,best_objective,failed,issues,actions\n";
  for (const auto& r : ckpt.records) {
    os << r.cycle << ',' << csv_escape(r.branch);
    write_assignment(os, cols, r.assignment);
    os << ',' << csv_escape(join(r.directives, ";")) << ',' << num(r.objective) << ','
       << num(r.best_objective) << ',' << (r.failed ? 1 : 0) << ','
       << csv_escape(format_report(r.issues)) << ',' << csv_escape(join(r.actions, ";")) << '\n';
  }
  return os.str();
}

std::string curves_csv(const Checkpoint& ckpt) {
  std::ostringstream os;
  os << "cycle,epoch,train_loss,val_loss,train_acc,val_acc\n";
  for (const auto& r : ckpt.records) {
    const auto& h = r.history;
    for (std::size_t e = 0; e < h.epochs(); ++e)
      os << r.cycle << ',' << e << ',' << num(h.train_loss[e]) << ',' << num(h.val_loss[e]) << ','
         << num(h.train_acc[e]) << ',' << num(h.val_acc[e]) << '\n';
  }
  return os.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot write " + tmp.string());
    out << text;
    if (!out) throw InvalidInput("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_config_snapshot(const std::filesystem::path& dir, const ExperimentConfig& config) {
  std::filesystem::create_directories(dir);
  write_text(dir / run_files::kConfig, to_json(config).dump(2) + "\n");
}

void write_run_artifacts(const std::filesystem::path& dir, const Checkpoint& ckpt) {
  std::filesystem::create_directories(dir);
  save_checkpoint(ckpt, dir / run_files::kCheckpoint);
  write_text(dir / run_files::kCycles, cycles_csv(ckpt));
  write_text(dir / run_files::kSummary, summary_csv(ckpt));
  write_text(dir / run_files::kCurves, curves_csv(ckpt));
}

}  // namespace rulebo
