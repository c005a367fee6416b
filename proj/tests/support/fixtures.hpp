#pragma once

#include "assembler.hpp"

namespace testsupport {

// fixtures/Micro: static abs(I)I, loop(I)I, diamond(I)I and a main that
// prints abs(-5), abs(7), loop(3), diamond(4), diamond(-4), one per line.
ClassModel micro_class();

// A class holding just `abs`, for tests that want a single method.
ClassModel abs_only_class();

}  // namespace testsupport

namespace testsupport {

// fixtures/Probe. hit1()V..hit4()V print their own name. Scenarios:
//   branch(I)V   iload0; ifeq L; hit1; hit2; L: hit3; return
//   jumper(I)V   iload0; ifle O; hit1; goto J; O: hit2; J: hit3; return
//   thrower()V   hit1; throw new RuntimeException
//   empty()V     return
// main runs branch(1), branch(0), jumper(1), jumper(0), empty() and
// thrower() (caught, then hit4), each after a "-- <name> <arg>" line.
ClassModel probe_class();

// fixtures/IterSafe: one list iterator, three hasNext()/next() pairs;
// prints a, b, c.
ClassModel iterator_safe_class();

// fixtures/IterBad: one hasNext() followed by two next() calls; prints a, b.
ClassModel iterator_violation_class();

// fixtures/Aes: AES-128. main(kb) prints the ciphertext of the FIPS-197
// example block in hex, then encrypts and decrypts kb KiB of LCG bytes and
// prints "ok" (or "mismatch") and a checksum of the ciphertext.
ClassModel aes_class();

// Every fixture class.
std::vector<ClassModel> all_fixtures();

}  // namespace testsupport

namespace testsupport {

// fixtures/Loader: main(names...) initializes each named class with the
// system loader and prints "verify <name>" for a VerifyError, "other <name>"
// for any other failure, and finally "done".
ClassModel loader_class();

}  // namespace testsupport
