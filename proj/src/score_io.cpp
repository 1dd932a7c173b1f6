#include <fstream>
#include <iomanip>
#include <sstream>

#include "frsb/errors.hpp"
#include "frsb/metrics.hpp"

namespace frsb {

namespace {

bool parse_flag(std::string text, const std::string& where) {
  while (!text.empty() && (text.back() == '\r' || text.back() == ' ')) text.pop_back();
  if (text == "1" || text == "true" || text == "genuine") return true;
  if (text == "0" || text == "false" || text == "impostor") return false;
  throw DomainError(where + ": genuine flag must be 0/1, got '" + text + "'");
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << std::setprecision(17);
  return out;
}

}  // namespace

ScoreSet read_scores_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open score file '" + path.string() + "'");
  std::vector<ScoreSample> samples;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto comma = line.find(',');
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (comma == std::string::npos) throw DomainError(where + ": expected 'score,genuine'");
    const std::string head = line.substr(0, comma);
    if (lineno == 1 && head == "score") continue;
    double score;
    try {
      std::size_t used = 0;
      score = std::stod(head, &used);
    } catch (const std::exception&) {
      throw DomainError(where + ": score '" + head + "' is not a number");
    }
    samples.push_back({score, parse_flag(line.substr(comma + 1), where)});
  }
  return ScoreSet::from_samples(samples);
}

void write_scores_csv(const ScoreSet& scores, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "score,genuine\n";
  for (const auto& s : scores.samples()) out << s.score << ',' << (s.genuine ? 1 : 0) << '\n';
}

void write_det_csv(std::span<const DetPoint> points, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "threshold,far,frr\n";
  for (const auto& p : points) out << p.threshold << ',' << p.far << ',' << p.frr << '\n';
}

}  // namespace frsb
