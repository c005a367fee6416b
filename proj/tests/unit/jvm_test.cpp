#include <doctest.h>

#include "../support/fixtures.hpp"
#include "../support/jvm.hpp"

using namespace cfweave::classfile;

TEST_CASE("micro fixture runs under full verification") {
  if (!testsupport::find_java()) {
    MESSAGE("java not found, skipped");
    return;
  }
  auto cls = testsupport::micro_class();
  const auto r = testsupport::run_fixture({{cls.this_class, emit_class(cls)}}, "fixtures.Micro");
  CHECK(r.err == "");
  CHECK(r.exit_code == 0);
  CHECK(r.out == "5\n7\n3\n2\n3\n");
}
