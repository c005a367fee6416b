#include "cfweave/analysis/assembler.hpp"

namespace cfweave::analysis {

ClassModel make_class(std::string name, std::string super) {
  ClassModel c;
  c.major_version = 52;
  c.access.bits = acc::PUBLIC | acc::SUPER;
  c.this_class = std::move(name);
  c.super_class = std::move(super);
  return c;
}

namespace {

void finish_method(const ClassModel& cls, MethodModel& m) {
  static const ClassHierarchy hierarchy;
  Analyzer an(cls.this_class, hierarchy);
  auto& code = *m.code;
  code.max_locals = 0;
  const auto frames = an.basic_frames(m);
  const auto mx = an.recompute_max(m, frames);
  code.max_stack = mx.max_stack;
  code.max_locals = mx.max_locals;
  auto map = an.compute_stack_map(m, frames);
  bool listed = false;
  for (const auto& slot : code.attribute_order) listed = listed || slot.part == CodeBody::Part::StackMap;
  if (map.empty()) {
    code.stack_map.reset();
    std::erase_if(code.attribute_order, [](const auto& s) { return s.part == CodeBody::Part::StackMap; });
  } else {
    code.stack_map = std::move(map);
    if (!listed) code.attribute_order.push_back({CodeBody::Part::StackMap});
  }
}

}  // namespace

MethodModel& add_method(ClassModel& cls, std::uint16_t access, std::string name, std::string desc, CodeBody body) {
  MethodModel m;
  m.access.bits = access;
  m.name = std::move(name);
  m.descriptor = std::move(desc);
  m.code = std::move(body);
  m.attributes.push_back(RawAttribute{"Code", {}});
  finish_method(cls, m);
  cls.methods.push_back(std::move(m));
  return cls.methods.back();
}

MethodModel& add_default_constructor(ClassModel& cls) {
  CodeBuilder b;
  b.var(op::ALOAD, 0).invoke(op::INVOKESPECIAL, *cls.super_class, "<init>", "()V").op(op::RETURN);
  return add_method(cls, acc::PUBLIC, "<init>", "()V", b.take());
}

void finish_frames(ClassModel& cls) {
  for (auto& m : cls.methods)
    if (m.code) finish_method(cls, m);
}

}  // namespace cfweave::analysis
