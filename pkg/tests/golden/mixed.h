// a little of everything the emitter handles
#pragma omit blob_t
#pragma single_obj_ptr node

struct base_t { short tag; };

struct node {
  int val;
  node *next;
};

class widget : public base_t {
  int count;
  char *label;
  int widget::*selector;
  node *head;
  blob_t payload;
  float grid[2][3];
public:
  void refresh();
  int command(int argc, char *argv[]);
  int other(double);
  static int instances;
};

union number { int i; double d; };

template <class T, int N>
class holder {
  T item;
  number n;
};
