#include "cfweave/transformers/transformer.hpp"

#include <numeric>
#include <sstream>

#include "cfweave/classfile/descriptor.hpp"
#include "cfweave/error.hpp"

namespace cfweave::transformers {

using joinpoint::Joinpoint;

KindSet kinds(std::initializer_list<Kind> list) {
  KindSet s;
  for (const Kind k : list) s.set(static_cast<std::size_t>(joinpoint::rank(k)));
  return s;
}

std::size_t MethodReport::total_joinpoints() const { return std::accumulate(joinpoints.begin(), joinpoints.end(), std::size_t{0}); }
std::size_t MethodReport::total_callbacks() const { return std::accumulate(callbacks.begin(), callbacks.end(), std::size_t{0}); }

std::size_t ClassReport::joinpoints() const {
  std::size_t n = 0;
  for (const auto& m : methods) n += m.total_joinpoints();
  return n;
}
std::size_t ClassReport::callbacks() const {
  std::size_t n = 0;
  for (const auto& m : methods) n += m.total_callbacks();
  return n;
}
std::size_t ClassReport::actions() const {
  std::size_t n = 0;
  for (const auto& m : methods) n += m.actions;
  return n;
}
std::size_t ClassReport::methods_modified() const {
  std::size_t n = 0;
  for (const auto& m : methods) n += m.modified ? 1 : 0;
  return n;
}

analysis::ClassHierarchy make_hierarchy(const PipelineConfig& config) {
  analysis::ClassHierarchy h;
  for (const auto& entry : config.classpath) h.add_classpath_entry(entry);
  return h;
}

namespace {

void dispatch(Transformer& t, const Joinpoint& jp, DynamicContext& dc) {
  switch (jp.kind) {
    case Kind::OnMethodEnter: t.on_method_enter(*std::get<const MethodCtx*>(jp.context), dc); break;
    case Kind::OnBasicBlockEnter: t.on_basic_block_enter(*std::get<const BasicBlockCtx*>(jp.context), dc); break;
    case Kind::OnTrueBranchEnter: t.on_true_branch_enter(*std::get<const BasicBlockCtx*>(jp.context), dc); break;
    case Kind::OnFalseBranchEnter: t.on_false_branch_enter(*std::get<const BasicBlockCtx*>(jp.context), dc); break;
    case Kind::BeforeInstruction: t.before_instruction(*std::get<const InstructionCtx*>(jp.context), dc); break;
    case Kind::BeforeMethodCall: t.before_method_call(*std::get<const MethodCallCtx*>(jp.context), dc); break;
    case Kind::AfterMethodCall: t.after_method_call(*std::get<const MethodCallCtx*>(jp.context), dc); break;
    case Kind::AfterInstruction: t.after_instruction(*std::get<const InstructionCtx*>(jp.context), dc); break;
    case Kind::OnBasicBlockExit: t.on_basic_block_exit(*std::get<const BasicBlockCtx*>(jp.context), dc); break;
    case Kind::OnMethodExit: t.on_method_exit(*std::get<const MethodCtx*>(jp.context), dc); break;
  }
}

}  // namespace

PipelineResult run_pipeline(const classfile::ClassModel& cls, Transformer& t, const PipelineConfig& config,
                            const analysis::ClassHierarchy& hierarchy) {
  PipelineResult result{cls, {}};
  ClassReport& report = result.report;
  report.class_name = cls.this_class;
  report.in_scope = config.scope.matches_class(cls.this_class);
  if (!report.in_scope) return result;

  const KindSet wanted = t.kinds();
  joinpoint::PrepareOptions prep;
  prep.split_critical_edges = wanted.test(joinpoint::rank(Kind::OnTrueBranchEnter)) ||
                              wanted.test(joinpoint::rank(Kind::OnFalseBranchEnter));
  prep.strict_frames = config.strict_frames;
  weaver::FinalizeOptions fin;
  fin.strict_frames = config.strict_frames;
  fin.strip_frames = config.strip_frames;

  const joinpoint::ClassCtx class_ctx{cls.this_class, &cls};
  std::vector<std::string> failures;
  std::string first_failed;
  std::size_t block_base = 0;

  for (std::size_t mi = 0; mi < cls.methods.size(); ++mi) {
    const auto& source = cls.methods[mi];
    if (!source.code || !config.scope.matches(cls.this_class, source.name)) continue;
    const std::string who = classfile::dotted(cls.this_class) + "." + source.name + source.descriptor;
    MethodReport mr;
    mr.name = source.name;
    mr.descriptor = source.descriptor;
    try {
      auto view = joinpoint::prepare_method(class_ctx, mi, hierarchy, block_base, prep);
      block_base += view->cfg.blocks.size();
      weaver::MethodWeaver w(*view, hierarchy);
      t.begin_method(view->ctx);
      for (const Joinpoint& jp : view->joinpoints) {
        const auto k = static_cast<std::size_t>(joinpoint::rank(jp.kind));
        ++mr.joinpoints[k];
        if (!wanted.test(k)) continue;
        ++mr.callbacks[k];
        auto dc = w.context(jp);
        dispatch(t, jp, dc);
      }
      mr.actions = w.action_count();
      std::optional<cfg::Cfg> woven_cfg;
      if (mr.actions > 0) {
        w.apply();
        weaver::finalize(view->method, cls, hierarchy, fin);
        result.model.methods[mi] = view->method;
        mr.modified = true;
        if (config.visualize_dir) woven_cfg = cfg::build_cfg(view->method);
      }
      if (config.visualize_dir)
        report.visualizations.push_back(cfg::render_cfg_html(cls.this_class, view->original_cfg,
                                                             woven_cfg ? &*woven_cfg : &view->cfg, *config.visualize_dir));
    } catch (const WeaveError& e) {
      if (first_failed.empty()) first_failed = e.method();
      failures.push_back(e.what());
    } catch (const Error& e) {
      if (first_failed.empty()) first_failed = who;
      failures.push_back(who + ": " + e.what());
    }
    report.modified = report.modified || mr.modified;
    report.methods.push_back(std::move(mr));
  }
  if (!failures.empty()) {
    std::string detail;
    for (std::size_t i = 0; i < failures.size(); ++i) detail += (i ? "; " : "") + failures[i];
    throw WeaveError(first_failed, std::to_string(failures.size()) + " method(s) failed: " + detail);
  }
  return result;
}

InstrumentedBytes instrument_class(std::span<const std::uint8_t> bytes, Transformer& t, const PipelineConfig& config,
                                   const analysis::ClassHierarchy& hierarchy) {
  const auto model = classfile::parse_class(bytes);
  auto result = run_pipeline(model, t, config, hierarchy);
  InstrumentedBytes out;
  if (result.report.modified) out.bytes = classfile::emit_class(result.model);
  else out.bytes.assign(bytes.begin(), bytes.end());
  out.report = std::move(result.report);
  return out;
}

std::string format_report(const ClassReport& r, bool verbose) {
  std::ostringstream os;
  os << "class " << classfile::dotted(r.class_name) << (r.in_scope ? "" : " out-of-scope")
     << (r.modified ? " modified" : "") << " methods=" << r.methods.size() << " joinpoints=" << r.joinpoints()
     << " callbacks=" << r.callbacks() << " actions=" << r.actions() << "\n";
  if (verbose) {
    for (const auto& m : r.methods) {
      os << "  method " << m.name << m.descriptor << (m.modified ? " modified" : "") << " actions=" << m.actions;
      for (std::size_t k = 0; k < joinpoint::kKindCount; ++k)
        if (m.joinpoints[k] > 0)
          os << " " << joinpoint::to_string(static_cast<Kind>(k)) << "=" << m.callbacks[k] << "/" << m.joinpoints[k];
      os << "\n";
    }
    for (const auto& v : r.visualizations) os << "  cfg " << v.string() << "\n";
  }
  return os.str();
}

}  // namespace cfweave::transformers
