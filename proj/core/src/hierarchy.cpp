#include "cfweave/analysis/hierarchy.hpp"

#include <vector>

#include "cfweave/classfile/jar.hpp"

namespace cfweave::analysis {

namespace {

struct Builtin {
  const char* name;
  const char* super;
  bool is_interface;
};

constexpr const char* kObject = "java/lang/Object";

// name, superclass, interface?
constexpr Builtin kBuiltins[] = {
    {"java/lang/String", kObject, false},
    {"java/lang/Class", kObject, false},
    {"java/lang/System", kObject, false},
    {"java/lang/Math", kObject, false},
    {"java/lang/Thread", kObject, false},
    {"java/lang/ClassLoader", kObject, false},
    {"java/lang/Enum", kObject, false},
    {"java/lang/Record", kObject, false},
    {"java/lang/Void", kObject, false},
    {"java/lang/Boolean", kObject, false},
    {"java/lang/Character", kObject, false},
    {"java/lang/Number", kObject, false},
    {"java/lang/Byte", "java/lang/Number", false},
    {"java/lang/Short", "java/lang/Number", false},
    {"java/lang/Integer", "java/lang/Number", false},
    {"java/lang/Long", "java/lang/Number", false},
    {"java/lang/Float", "java/lang/Number", false},
    {"java/lang/Double", "java/lang/Number", false},
    {"java/math/BigInteger", "java/lang/Number", false},
    {"java/math/BigDecimal", "java/lang/Number", false},
    {"java/util/concurrent/atomic/AtomicInteger", "java/lang/Number", false},
    {"java/util/concurrent/atomic/AtomicLong", "java/lang/Number", false},
    {"java/lang/AbstractStringBuilder", kObject, false},
    {"java/lang/StringBuilder", "java/lang/AbstractStringBuilder", false},
    {"java/lang/StringBuffer", "java/lang/AbstractStringBuilder", false},
    {"java/lang/Throwable", kObject, false},
    {"java/lang/Exception", "java/lang/Throwable", false},
    {"java/lang/Error", "java/lang/Throwable", false},
    {"java/lang/RuntimeException", "java/lang/Exception", false},
    {"java/lang/IllegalArgumentException", "java/lang/RuntimeException", false},
    {"java/lang/NumberFormatException", "java/lang/IllegalArgumentException", false},
    {"java/lang/IllegalStateException", "java/lang/RuntimeException", false},
    {"java/lang/NullPointerException", "java/lang/RuntimeException", false},
    {"java/lang/ClassCastException", "java/lang/RuntimeException", false},
    {"java/lang/ArithmeticException", "java/lang/RuntimeException", false},
    {"java/lang/ArrayStoreException", "java/lang/RuntimeException", false},
    {"java/lang/NegativeArraySizeException", "java/lang/RuntimeException", false},
    {"java/lang/SecurityException", "java/lang/RuntimeException", false},
    {"java/lang/UnsupportedOperationException", "java/lang/RuntimeException", false},
    {"java/lang/IndexOutOfBoundsException", "java/lang/RuntimeException", false},
    {"java/lang/ArrayIndexOutOfBoundsException", "java/lang/IndexOutOfBoundsException", false},
    {"java/lang/StringIndexOutOfBoundsException", "java/lang/IndexOutOfBoundsException", false},
    {"java/util/NoSuchElementException", "java/lang/RuntimeException", false},
    {"java/util/ConcurrentModificationException", "java/lang/RuntimeException", false},
    {"java/io/UncheckedIOException", "java/lang/RuntimeException", false},
    {"java/lang/InterruptedException", "java/lang/Exception", false},
    {"java/lang/CloneNotSupportedException", "java/lang/Exception", false},
    {"java/lang/ReflectiveOperationException", "java/lang/Exception", false},
    {"java/lang/ClassNotFoundException", "java/lang/ReflectiveOperationException", false},
    {"java/lang/IllegalAccessException", "java/lang/ReflectiveOperationException", false},
    {"java/lang/InstantiationException", "java/lang/ReflectiveOperationException", false},
    {"java/lang/NoSuchFieldException", "java/lang/ReflectiveOperationException", false},
    {"java/lang/NoSuchMethodException", "java/lang/ReflectiveOperationException", false},
    {"java/lang/reflect/InvocationTargetException", "java/lang/ReflectiveOperationException", false},
    {"java/io/IOException", "java/lang/Exception", false},
    {"java/io/FileNotFoundException", "java/io/IOException", false},
    {"java/io/EOFException", "java/io/IOException", false},
    {"java/net/SocketException", "java/io/IOException", false},
    {"java/net/UnknownHostException", "java/io/IOException", false},
    {"java/lang/AssertionError", "java/lang/Error", false},
    {"java/lang/LinkageError", "java/lang/Error", false},
    {"java/lang/NoClassDefFoundError", "java/lang/LinkageError", false},
    {"java/lang/ExceptionInInitializerError", "java/lang/LinkageError", false},
    {"java/lang/VirtualMachineError", "java/lang/Error", false},
    {"java/lang/OutOfMemoryError", "java/lang/VirtualMachineError", false},
    {"java/lang/StackOverflowError", "java/lang/VirtualMachineError", false},
    {"java/util/AbstractCollection", kObject, false},
    {"java/util/AbstractList", "java/util/AbstractCollection", false},
    {"java/util/AbstractSequentialList", "java/util/AbstractList", false},
    {"java/util/ArrayList", "java/util/AbstractList", false},
    {"java/util/LinkedList", "java/util/AbstractSequentialList", false},
    {"java/util/Vector", "java/util/AbstractList", false},
    {"java/util/Stack", "java/util/Vector", false},
    {"java/util/AbstractSet", "java/util/AbstractCollection", false},
    {"java/util/HashSet", "java/util/AbstractSet", false},
    {"java/util/LinkedHashSet", "java/util/HashSet", false},
    {"java/util/TreeSet", "java/util/AbstractSet", false},
    {"java/util/AbstractQueue", "java/util/AbstractCollection", false},
    {"java/util/PriorityQueue", "java/util/AbstractQueue", false},
    {"java/util/ArrayDeque", "java/util/AbstractCollection", false},
    {"java/util/AbstractMap", kObject, false},
    {"java/util/HashMap", "java/util/AbstractMap", false},
    {"java/util/LinkedHashMap", "java/util/HashMap", false},
    {"java/util/TreeMap", "java/util/AbstractMap", false},
    {"java/util/IdentityHashMap", "java/util/AbstractMap", false},
    {"java/util/WeakHashMap", "java/util/AbstractMap", false},
    {"java/util/concurrent/ConcurrentHashMap", "java/util/AbstractMap", false},
    {"java/util/Dictionary", kObject, false},
    {"java/util/Hashtable", "java/util/Dictionary", false},
    {"java/util/Properties", "java/util/Hashtable", false},
    {"java/util/Collections", kObject, false},
    {"java/util/Arrays", kObject, false},
    {"java/util/Objects", kObject, false},
    {"java/io/InputStream", kObject, false},
    {"java/io/FilterInputStream", "java/io/InputStream", false},
    {"java/io/BufferedInputStream", "java/io/FilterInputStream", false},
    {"java/io/FileInputStream", "java/io/InputStream", false},
    {"java/io/ByteArrayInputStream", "java/io/InputStream", false},
    {"java/io/OutputStream", kObject, false},
    {"java/io/FilterOutputStream", "java/io/OutputStream", false},
    {"java/io/PrintStream", "java/io/FilterOutputStream", false},
    {"java/io/BufferedOutputStream", "java/io/FilterOutputStream", false},
    {"java/io/FileOutputStream", "java/io/OutputStream", false},
    {"java/io/ByteArrayOutputStream", "java/io/OutputStream", false},
    {"java/io/Reader", kObject, false},
    {"java/io/BufferedReader", "java/io/Reader", false},
    {"java/io/InputStreamReader", "java/io/Reader", false},
    {"java/io/FileReader", "java/io/InputStreamReader", false},
    {"java/io/StringReader", "java/io/Reader", false},
    {"java/io/Writer", kObject, false},
    {"java/io/BufferedWriter", "java/io/Writer", false},
    {"java/io/OutputStreamWriter", "java/io/Writer", false},
    {"java/io/FileWriter", "java/io/OutputStreamWriter", false},
    {"java/io/PrintWriter", "java/io/Writer", false},
    {"java/io/StringWriter", "java/io/Writer", false},
    {"java/io/File", kObject, false},
    {"java/lang/Iterable", kObject, true},
    {"java/util/Collection", kObject, true},
    {"java/util/List", kObject, true},
    {"java/util/Set", kObject, true},
    {"java/util/SortedSet", kObject, true},
    {"java/util/Queue", kObject, true},
    {"java/util/Deque", kObject, true},
    {"java/util/Map", kObject, true},
    {"java/util/SortedMap", kObject, true},
    {"java/util/Map$Entry", kObject, true},
    {"java/util/Iterator", kObject, true},
    {"java/util/ListIterator", kObject, true},
    {"java/util/Enumeration", kObject, true},
    {"java/util/Comparator", kObject, true},
    {"java/util/RandomAccess", kObject, true},
    {"java/util/concurrent/ConcurrentMap", kObject, true},
    {"java/lang/Comparable", kObject, true},
    {"java/lang/CharSequence", kObject, true},
    {"java/lang/Runnable", kObject, true},
    {"java/lang/Cloneable", kObject, true},
    {"java/lang/AutoCloseable", kObject, true},
    {"java/lang/Appendable", kObject, true},
    {"java/io/Closeable", kObject, true},
    {"java/io/Flushable", kObject, true},
    {"java/io/Serializable", kObject, true},
    {"java/lang/reflect/Type", kObject, true},
    {"java/lang/reflect/AnnotatedElement", kObject, true},
    {"java/lang/reflect/AccessibleObject", kObject, false},
    {"java/lang/reflect/Executable", "java/lang/reflect/AccessibleObject", false},
    {"java/lang/reflect/Method", "java/lang/reflect/Executable", false},
    {"java/lang/reflect/Constructor", "java/lang/reflect/Executable", false},
    {"java/lang/reflect/Field", "java/lang/reflect/AccessibleObject", false},
};

// Element name of an array class name such as "[Ljava/lang/String;" or
// "[[I", as a class/array name; nothing for primitive elements.
std::optional<std::string> element_class(std::string_view array) {
  std::string_view rest = array.substr(1);
  if (rest.empty()) return std::nullopt;
  if (rest[0] == '[') return std::string(rest);
  if (rest[0] == 'L' && rest.back() == ';') return std::string(rest.substr(1, rest.size() - 2));
  return std::nullopt;
}

std::string array_of(std::string_view element) {
  if (!element.empty() && element[0] == '[') return "[" + std::string(element);
  return "[L" + std::string(element) + ";";
}

}  // namespace

ClassHierarchy::ClassHierarchy() {
  classes_.emplace(kObject, ClassInfo{std::nullopt, false});
  for (const auto& b : kBuiltins) classes_.emplace(b.name, ClassInfo{std::string(b.super), b.is_interface});
}

void ClassHierarchy::add(std::string name, ClassInfo info) { classes_[std::move(name)] = std::move(info); }

void ClassHierarchy::add_class(const classfile::ClassModel& model) {
  add(model.this_class, ClassInfo{model.super_class, model.is_interface()});
}

void ClassHierarchy::add_class_bytes(std::span<const std::uint8_t> bytes) {
  classfile::ByteReader in(bytes);
  if (in.u4() != 0xCAFEBABE) throw MalformedClass("bad magic number");
  in.skip(4);
  const auto pool = classfile::ConstantPool::read(in);
  const std::uint16_t access = in.u2();
  std::string name = pool.class_name(in.u2());
  const std::uint16_t super = in.u2();
  ClassInfo info;
  if (super != 0) info.super = pool.class_name(super);
  info.is_interface = (access & classfile::acc::INTERFACE) != 0;
  add(std::move(name), std::move(info));
}

void ClassHierarchy::add_classpath_entry(const std::filesystem::path& entry) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (fs::is_directory(entry, ec)) {
    std::vector<fs::path> files;
    for (const auto& f : fs::recursive_directory_iterator(entry))
      if (f.is_regular_file() && f.path().extension() == ".class") files.push_back(f.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) add_class_bytes(classfile::read_file(f));
  } else if (entry.extension() == ".jar" || entry.extension() == ".zip") {
    for (const auto& e : classfile::read_jar(entry).entries)
      if (e.is_class() && !e.name.ends_with("module-info.class")) add_class_bytes(e.data);
  } else if (entry.extension() == ".class") {
    add_class_bytes(classfile::read_file(entry));
  } else if (!fs::exists(entry, ec)) {
    throw IoError("classpath entry not found: " + entry.string());
  } else {
    throw IoError("unsupported classpath entry: " + entry.string());
  }
}

const ClassInfo* ClassHierarchy::find(std::string_view name) const {
  auto it = classes_.find(std::string(name));
  return it == classes_.end() ? nullptr : &it->second;
}

std::optional<std::string> ClassHierarchy::common_superclass(std::string_view a, std::string_view b) const {
  if (a == b) return std::string(a);
  const bool array_a = !a.empty() && a[0] == '[';
  const bool array_b = !b.empty() && b[0] == '[';
  if (array_a || array_b) {
    if (!(array_a && array_b)) return std::string(kObject);
    const auto ea = element_class(a);
    const auto eb = element_class(b);
    if (!ea || !eb) return std::string(kObject);  // primitive arrays of different kinds
    auto inner = common_superclass(*ea, *eb);
    if (!inner) return std::nullopt;
    return array_of(*inner);
  }
  const ClassInfo* ia = find(a);
  const ClassInfo* ib = find(b);
  if (ia == nullptr || ib == nullptr) return std::nullopt;
  if (ia->is_interface || ib->is_interface) return std::string(kObject);

  std::vector<std::string> chain_a;
  for (std::string cur(a);;) {
    chain_a.push_back(cur);
    const ClassInfo* info = find(cur);
    if (info == nullptr) return std::nullopt;
    if (!info->super) break;
    cur = *info->super;
    if (chain_a.size() > 512) return std::nullopt;  // cyclic table
  }
  for (std::string cur(b);;) {
    if (std::find(chain_a.begin(), chain_a.end(), cur) != chain_a.end()) return cur;
    const ClassInfo* info = find(cur);
    if (info == nullptr || !info->super) return std::nullopt;
    cur = *info->super;
  }
}

std::string ClassHierarchy::resolve_common_superclass(std::string_view a, std::string_view b) const {
  return common_superclass(a, b).value_or(kObject);
}

}  // namespace cfweave::analysis
