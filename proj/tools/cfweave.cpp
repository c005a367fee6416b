// cfweave: build-time driver. Reads a .class file, a jar or a directory of
// classes, weaves one built-in transformer into the classes in scope and
// writes the result together with the transformer's runtime classes.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include <CLI11.hpp>

#include "cfweave/classfile/class_model.hpp"
#include "cfweave/classfile/jar.hpp"
#include "cfweave/error.hpp"
#include "cfweave/transformers/builtins.hpp"

namespace fs = std::filesystem;
using namespace cfweave;
namespace tf = cfweave::transformers;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kWeave = 2;

struct Options {
  fs::path input;
  fs::path output;
  std::string transformer;
  std::vector<std::string> scope;
  std::vector<std::string> classpath;
  std::optional<fs::path> visualize;
  bool strict_frames = false;
  bool strip_frames = false;
  bool verbose = false;
  unsigned jobs = 0;
};

// One class to instrument; `data` is replaced by the woven bytes.
struct Unit {
  std::string where;  // file or entry name, for messages
  classfile::Bytes data;
  tf::ClassReport report;
  std::optional<std::string> error;
  bool weave_error = false;
};

void weave_all(std::vector<Unit*>& units, const Options& opt, const tf::PipelineConfig& config,
               const analysis::ClassHierarchy& hierarchy) {
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < units.size(); i = next++) {
      Unit& u = *units[i];
      // Transformers keep per-method state, so each class gets its own.
      const auto t = tf::make_builtin(opt.transformer);
      try {
        auto out = tf::instrument_class(u.data, *t, config, hierarchy);
        u.data = std::move(out.bytes);
        u.report = std::move(out.report);
      } catch (const WeaveError& e) {
        u.error = e.what();
        u.weave_error = true;
      } catch (const Error& e) {
        u.error = u.where + ": " + e.what();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(opt.jobs, static_cast<unsigned>(units.size())));
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
}

std::string class_file_name(const std::string& internal) { return internal + ".class"; }

int run(const Options& opt) {
  if (!fs::exists(opt.input)) {
    std::cerr << "error: input does not exist: " << opt.input.string() << "\n";
    return kUsage;
  }
  tf::PipelineConfig config;
  config.scope = joinpoint::Scope(opt.scope);
  config.visualize_dir = opt.visualize;
  config.strict_frames = opt.strict_frames;
  config.strip_frames = opt.strip_frames;
  for (const auto& c : opt.classpath) config.classpath.emplace_back(c);
  config.classpath.push_back(opt.input);
  if (opt.visualize) fs::create_directories(*opt.visualize);
  const auto hierarchy = tf::make_hierarchy(config);
  const auto runtime = tf::make_builtin(opt.transformer)->runtime_classes();

  const bool is_dir = fs::is_directory(opt.input);
  const bool is_jar = !is_dir && (opt.input.extension() == ".jar" || opt.input.extension() == ".zip");

  std::vector<Unit> units;
  std::vector<Unit*> todo;
  classfile::Archive archive;
  std::vector<fs::path> relative;  // directory input: path of each unit
  std::vector<fs::path> others;    // directory input: files copied as they are
  std::vector<std::size_t> entry_of;

  if (is_jar) {
    archive = classfile::read_jar(opt.input);
    for (std::size_t i = 0; i < archive.entries.size(); ++i) {
      const auto& e = archive.entries[i];
      if (!e.is_class() || e.name.ends_with("module-info.class")) continue;
      units.push_back({e.name, e.data, {}, {}, false});
      entry_of.push_back(i);
    }
  } else if (is_dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(opt.input))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      const auto rel = fs::relative(f, opt.input);
      if (f.extension() == ".class" && f.filename() != "module-info.class") {
        units.push_back({rel.generic_string(), classfile::read_file(f), {}, {}, false});
        relative.push_back(rel);
      } else {
        others.push_back(rel);
      }
    }
  } else {
    units.push_back({opt.input.string(), classfile::read_file(opt.input), {}, {}, false});
  }
  for (auto& u : units) todo.push_back(&u);
  weave_all(todo, opt, config, hierarchy);

  int status = kOk;
  for (const auto& u : units) {
    if (!u.error) continue;
    std::cerr << "error: " << *u.error << "\n";
    status = std::max(status, u.weave_error ? kWeave : kUsage);
  }
  if (status != kOk) return status;

  std::size_t in_scope = 0, modified = 0, methods = 0, joinpoints = 0, callbacks = 0, actions = 0;
  for (const auto& u : units) {
    const auto& r = u.report;
    in_scope += r.in_scope ? 1 : 0;
    modified += r.modified ? 1 : 0;
    methods += r.methods_modified();
    joinpoints += r.joinpoints();
    callbacks += r.callbacks();
    actions += r.actions();
    if (opt.verbose) std::cout << tf::format_report(r, true);
  }
  const bool add_runtime = modified > 0;

  if (is_jar) {
    fs::path out = opt.output;
    if (fs::is_directory(out)) out /= opt.input.filename();
    std::set<std::string> names;
    for (std::size_t k = 0; k < units.size(); ++k) archive.entries[entry_of[k]].data = units[k].data;
    for (const auto& e : archive.entries) names.insert(e.name);
    if (add_runtime)
      for (const auto& [name, bytes] : runtime)
        if (!names.count(class_file_name(name))) archive.entries.push_back({class_file_name(name), bytes, nullptr});
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    classfile::write_jar(archive, out);
  } else if (is_dir) {
    fs::create_directories(opt.output);
    for (std::size_t k = 0; k < units.size(); ++k) classfile::write_file(opt.output / relative[k], units[k].data);
    for (const auto& rel : others) {
      fs::create_directories((opt.output / rel).parent_path());
      fs::copy_file(opt.input / rel, opt.output / rel, fs::copy_options::overwrite_existing);
    }
    if (add_runtime)
      for (const auto& [name, bytes] : runtime) classfile::write_file(opt.output / class_file_name(name), bytes);
  } else {
    // A directory output gets the class under its internal name, so the
    // directory can go straight onto a class path.
    fs::path out = opt.output, root = opt.output;
    const bool to_dir = fs::is_directory(out) || out.extension() != ".class";
    if (to_dir) {
      fs::create_directories(out);
      out /= class_file_name(units.front().report.class_name);
    } else {
      root = out.has_parent_path() ? out.parent_path() : fs::path(".");
    }
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    classfile::write_file(out, units.front().data);
    if (add_runtime)
      for (const auto& [name, bytes] : runtime) classfile::write_file(root / class_file_name(name), bytes);
  }

  std::cout << "classes scanned: " << units.size() << "\n"
            << "classes in scope: " << in_scope << "\n"
            << "classes modified: " << modified << "\n"
            << "methods modified: " << methods << "\n"
            << "joinpoints: " << joinpoints << "\n"
            << "callbacks: " << callbacks << "\n"
            << "actions: " << actions << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  opt.jobs = std::max(1u, std::thread::hardware_concurrency());
  CLI::App app{"Build-time bytecode instrumentation", "cfweave"};
  app.require_subcommand(1, 1);
  auto* instrument = app.add_subcommand("instrument", "Weave a transformer into classes");
  instrument->add_option("--input", opt.input, ".class file, jar, or directory of classes")->required();
  instrument->add_option("--output", opt.output, "output file or directory")->required();
  std::string names;
  for (const auto& n : tf::builtin_names()) names += (names.empty() ? "" : ", ") + n;
  instrument->add_option("--transformer", opt.transformer, "one of: " + names)->required();
  instrument->add_option("--scope", opt.scope, "package/class/method patterns, '*' wildcards")->delimiter(',');
  instrument->add_option("--classpath", opt.classpath, "jars or directories for type resolution")->delimiter(':');
  instrument->add_option("--visualize-cfg", opt.visualize, "write one HTML graph per method here");
  instrument->add_flag("--strict-frames", opt.strict_frames, "fail on classes missing from the class path");
  instrument->add_flag("--strip-frames", opt.strip_frames, "drop stack maps instead of recomputing them");
  instrument->add_flag("--verbose,-v", opt.verbose, "per-class and per-method report");
  instrument->add_option("--jobs,-j", opt.jobs, "worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  if (!tf::make_builtin(opt.transformer)) {
    std::cerr << "error: unknown transformer '" << opt.transformer << "' (known: " << names << ")\n"
              << instrument->help();
    return kUsage;
  }
  if (opt.strict_frames && opt.strip_frames) {
    std::cerr << "error: --strict-frames and --strip-frames exclude each other\n";
    return kUsage;
  }
  try {
    return run(opt);
  } catch (const WeaveError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kWeave;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
}
